#pragma once

// Experiment harness: instance hardness, top-k success metrics, and
// Monte-Carlo budget-vs-error curves for the crowd and read-overlap
// settings. Trials get independent derived seeds, so doubling the trial
// count leaves earlier trials' outcomes unchanged, and thread count never
// affects results (aggregation is by trial index).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "specbandit/common.hpp"
#include "specbandit/minhash.hpp"
#include "specbandit/model.hpp"
#include "specbandit/sampler.hpp"
#include "specbandit/scoring.hpp"
#include "specbandit/spectral.hpp"
#include "specbandit/synthdata.hpp"
#include "specbandit/threshold.hpp"
#include "specbandit/topk.hpp"

namespace specbandit {

struct InstanceHardness {
  Eigen::VectorXd sorted_u;    // descending
  Eigen::VectorXd gaps;        // u_(i) - u_(k), all i (1-based rank order)
  double delta_kplus1 = 0.0;   // u_(k) - u_(k+1) > 0
  double h2 = 0.0;             // max_{i > k} i / gap_i^2
  int k = 0;
};

inline InstanceHardness instance_hardness(const Eigen::VectorXd& u, int k) {
  const int n = static_cast<int>(u.size());
  if (k < 1 || k >= n) throw InvalidArgumentError("instance_hardness: need 1 <= k < n");
  InstanceHardness h;
  h.k = k;
  h.sorted_u = u;
  std::sort(h.sorted_u.data(), h.sorted_u.data() + n, std::greater<double>());
  const double uk = h.sorted_u(k - 1);
  h.delta_kplus1 = uk - h.sorted_u(k);
  if (h.delta_kplus1 <= 0.0)
    throw InvalidArgumentError("instance_hardness: tie at the rank-k boundary");
  h.gaps = h.sorted_u.array() - uk;
  h.h2 = 0.0;
  for (int i = k + 1; i <= n; ++i) {
    double g = h.gaps(i - 1);
    h.h2 = std::max(h.h2, static_cast<double>(i) / (g * g));
  }
  return h;
}

// exact_success = 1 iff returned_k equals the truth as a set; recall =
// fraction of the truth found in returned_2k.
inline std::pair<int, double> metrics(const std::vector<int>& returned_k,
                                      const std::vector<int>& returned_2k,
                                      const std::vector<int>& truth_topk) {
  if (returned_k.size() != truth_topk.size())
    throw InvalidArgumentError("metrics: returned_k / truth size mismatch");
  std::vector<int> a = returned_k, t = truth_topk;
  std::sort(a.begin(), a.end());
  std::sort(t.begin(), t.end());
  int exact = a == t ? 1 : 0;
  std::vector<int> b = returned_2k;
  std::sort(b.begin(), b.end());
  size_t hit = 0;
  for (int id : t)
    if (std::binary_search(b.begin(), b.end(), id)) ++hit;
  return {exact, static_cast<double>(hit) / static_cast<double>(t.size())};
}

struct CurvePoint {
  std::string algorithm;
  uint64_t budget = 0;
  int trials = 0;
  double exact_error = 0.0;
  double exact_error_se = 0.0;
  double top2k_recall = 0.0;
  double mean_pulls = 0.0;
  uint64_t seed = 0;
};

struct TrialOutcome {
  int exact = 0;       // top-k: exact-recovery indicator; threshold: sandwich violation
  double recall = 0.0;
  double pulls = 0.0;
};

struct RowResult {
  CurvePoint point;
  std::vector<TrialOutcome> trials;
};

namespace detail {

template <typename Fn>
void parallel_for(int64_t count, int threads, Fn&& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || count <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int64_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// exact_error treats TrialOutcome.exact as a success flag (errors = 1 - mean)
// unless invert=false, where it is already a failure flag.
inline RowResult aggregate_row(std::string algorithm, uint64_t budget, int trials,
                               uint64_t root_seed, std::vector<TrialOutcome> outcomes,
                               bool exact_is_success) {
  RowResult row;
  double sum_exact = 0, sum_recall = 0, sum_pulls = 0;
  for (const TrialOutcome& o : outcomes) {
    sum_exact += o.exact;
    sum_recall += o.recall;
    sum_pulls += o.pulls;
  }
  const double nt = static_cast<double>(trials);
  double err = exact_is_success ? 1.0 - sum_exact / nt : sum_exact / nt;
  row.point.algorithm = std::move(algorithm);
  row.point.budget = budget;
  row.point.trials = trials;
  row.point.exact_error = err;
  row.point.exact_error_se = std::sqrt(std::max(0.0, err * (1.0 - err)) / nt);
  row.point.top2k_recall = sum_recall / nt;
  row.point.mean_pulls = sum_pulls / nt;
  row.point.seed = root_seed;
  row.trials = std::move(outcomes);
  return row;
}

inline uint64_t trial_seed(uint64_t root_seed, uint64_t algo_id, uint64_t budget,
                           int64_t trial) {
  return derive(derive(derive(root_seed, algo_id), budget), 0x7213ULL,
                static_cast<uint64_t>(trial));
}

}  // namespace detail

// Ranks rows by estimated overlap 1 - u (the rank-one model sees X = 1 - Y,
// so low u means high collision rate means high overlap).
inline ScoreFn overlap_score_fn(SpectralConfig cfg) {
  ScoreFn base = spectral_score_fn(cfg);
  return [base](const EstimatorInput& in) -> Eigen::VectorXd {
    return (1.0 - base(in).array()).matrix();
  };
}

// ---------- Experiment descriptors ----------

struct CrowdTopKSpec {
  int n = 1000;
  int k = 5;
  TopKMode mode = TopKMode::Practical;
  bool reuse_samples = true;
  // m_max = factor * sqrt(T); <= 0 disables. Disabled here: a finite-worker
  // cap ends the halving before it can concentrate budget on survivors.
  double m_max_factor = 0.0;
  // Column sums with the sampler's reference direction. Split scoring is
  // unusable inside the halving loop: cuts order survivors by score, so the
  // split pairs the strongest items with a vector fitted on the weakest half.
  SpectralConfig spectral{.v_hat_method = VHatMethod::ColumnSum};
  bool new_instance_per_trial = true;
};

struct AlignTopKSpec {
  int64_t genome_length = 20000;
  int64_t read_length = 1000;
  LayoutParams layout{};
  double noise_rate = 0.0;
  int n_calibration = 20;
  int k = 5;
  int kmer_k = 14;
  int64_t pool_size = 4096;
  bool canonical = false;
  TopKMode mode = TopKMode::Practical;
  bool reuse_samples = true;
  double m_max_factor = 10.0;
  SpectralConfig spectral{.v_hat_method = VHatMethod::ColumnSum};
};

struct CrowdThresholdSpec {
  int n = 200;
  double alpha = 0.1;  // bands on the +/- 1/2 scale of the symmetric channel
  double beta = 0.25;
  double delta = 0.0;
  SpectralConfig spectral{};
  bool new_instance_per_trial = true;
};

using ExperimentSpec = std::variant<CrowdTopKSpec, AlignTopKSpec, CrowdThresholdSpec>;

// ---------- Runners ----------

namespace detail {

inline TopKConfig topk_config(int k, uint64_t T, TopKMode mode, bool reuse,
                              double m_max_factor, const SpectralConfig& spectral,
                              ScoreFn override_fn) {
  TopKConfig cfg;
  cfg.k = k;
  cfg.budget = T;
  cfg.mode = mode;
  cfg.reuse_samples = reuse;
  if (m_max_factor > 0)
    cfg.m_max = static_cast<int64_t>(
        std::llround(m_max_factor * std::sqrt(static_cast<double>(T))));
  cfg.spectral = spectral;
  cfg.estimator_override = std::move(override_fn);
  return cfg;
}

// Adaptive runs re-run with the doubled target for recall; nonadaptive runs
// read both prefixes off the one ranking. Pull count is the max of the two
// runs (they share every draw up to the later halving decisions).
template <typename MakeSampler>
TrialOutcome topk_trial(MakeSampler&& make_sampler, const std::vector<int>& truth,
                        const TopKConfig& cfg_k, bool adaptive, uint64_t T) {
  TrialOutcome out;
  if (adaptive) {
    auto s1 = make_sampler();
    TopKResult r1 = sequential_halving_topk(*s1, cfg_k);
    TopKConfig cfg_2k = cfg_k;
    cfg_2k.k = std::min<int>(2 * cfg_k.k, s1->item_count());
    auto s2 = make_sampler();
    TopKResult r2 = sequential_halving_topk(*s2, cfg_2k);
    auto [exact, recall] = metrics(r1.selection, r2.selection, truth);
    out.exact = exact;
    out.recall = recall;
    out.pulls = static_cast<double>(
        std::max(s1->ledger().consumed(), s2->ledger().consumed()));
  } else {
    auto s = make_sampler();
    TopKResult r = nonadaptive_topk(*s, T, cfg_k.k, cfg_k);
    int k2 = std::min<int>(2 * cfg_k.k, s->item_count());
    std::vector<int> top2k = select_best(r.final_candidates, r.final_scores, k2);
    auto [exact, recall] = metrics(r.selection, top2k, truth);
    out.exact = exact;
    out.recall = recall;
    out.pulls = static_cast<double>(s->ledger().consumed());
  }
  return out;
}

}  // namespace detail

inline std::vector<RowResult> run_crowd_topk_rows(const CrowdTopKSpec& spec,
                                                  const std::vector<uint64_t>& budgets,
                                                  int trials, uint64_t root_seed,
                                                  int threads) {
  if (trials < 1) throw InvalidArgumentError("run_experiment: trials < 1");
  std::vector<RowResult> rows;
  RankOneInstance fixed;
  if (!spec.new_instance_per_trial)
    fixed = gen_crowd_instance(spec.n, derive(root_seed, 0x10ULL));
  for (uint64_t T : budgets) {
    for (int algo = 0; algo < 2; ++algo) {
      const bool adaptive = algo == 0;
      std::vector<TrialOutcome> outs(static_cast<size_t>(trials));
      detail::parallel_for(trials, threads, [&](int64_t t) {
        uint64_t seed = detail::trial_seed(root_seed, adaptive ? 1 : 2, T, t);
        RankOneInstance inst = spec.new_instance_per_trial
                                   ? gen_crowd_instance(spec.n, derive(seed, 0x10ULL))
                                   : fixed;
        std::vector<int> truth = top_k_indices(inst.u_vec(), spec.k);
        TopKConfig cfg = detail::topk_config(spec.k, T, spec.mode, spec.reuse_samples,
                                             spec.m_max_factor, spec.spectral, nullptr);
        auto make_sampler = [&] {
          return std::make_unique<RankOneSampler>(inst, derive(seed, 0x20ULL), T);
        };
        outs[static_cast<size_t>(t)] =
            detail::topk_trial(make_sampler, truth, cfg, adaptive, T);
      });
      rows.push_back(detail::aggregate_row(adaptive ? "adaptive" : "nonadaptive", T,
                                           trials, root_seed, std::move(outs), true));
    }
  }
  return rows;
}

struct AlignRunParams {
  int k = 5;
  TopKMode mode = TopKMode::Practical;
  bool reuse_samples = true;
  double m_max_factor = 10.0;
  SpectralConfig spectral{.v_hat_method = VHatMethod::ColumnSum};
};

// Curve runner over an already-built sketch pool with externally supplied
// ground truth (planted overlaps, or exact Jaccard for real FASTA input).
inline std::vector<RowResult> run_align_rows_with_pool(
    std::shared_ptr<const MinHashPool> pool, const std::vector<int>& truth,
    const AlignRunParams& params, const std::vector<uint64_t>& budgets, int trials,
    uint64_t root_seed, int threads) {
  if (trials < 1) throw InvalidArgumentError("run_experiment: trials < 1");
  std::vector<RowResult> rows;
  for (uint64_t T : budgets) {
    for (int algo = 0; algo < 2; ++algo) {
      const bool adaptive = algo == 0;
      std::vector<TrialOutcome> outs(static_cast<size_t>(trials));
      detail::parallel_for(trials, threads, [&](int64_t t) {
        uint64_t seed = detail::trial_seed(root_seed, adaptive ? 3 : 4, T, t);
        TopKConfig cfg =
            detail::topk_config(params.k, T, params.mode, params.reuse_samples,
                                params.m_max_factor, params.spectral,
                                overlap_score_fn(params.spectral));
        auto make_sampler = [&] {
          return std::make_unique<MinHashSampler>(pool, derive(seed, 0x20ULL), T);
        };
        outs[static_cast<size_t>(t)] =
            detail::topk_trial(make_sampler, truth, cfg, adaptive, T);
      });
      rows.push_back(detail::aggregate_row(adaptive ? "adaptive" : "nonadaptive", T,
                                           trials, root_seed, std::move(outs), true));
    }
  }
  return rows;
}

inline std::vector<RowResult> run_align_topk_rows(const AlignTopKSpec& spec,
                                                  const std::vector<uint64_t>& budgets,
                                                  int trials, uint64_t root_seed,
                                                  int threads) {
  // One fixed planted instance and one sketch pool for the whole experiment;
  // trials differ only in column order and algorithm randomness.
  std::string genome = gen_genome(spec.genome_length, derive(root_seed, 0x91ULL));
  std::vector<int64_t> offsets =
      default_layout(spec.layout, spec.genome_length, spec.read_length,
                     derive(root_seed, 0x92ULL));
  PlantedReadSet set =
      gen_reads_with_overlaps(genome, spec.read_length, offsets, spec.noise_rate,
                              spec.n_calibration, derive(root_seed, 0x93ULL));
  auto pool = std::make_shared<const MinHashPool>(set.reference, set.reads, spec.kmer_k,
                                                  spec.pool_size, derive(root_seed, 0x94ULL),
                                                  spec.canonical);
  Eigen::VectorXd overlap = Eigen::Map<const Eigen::VectorXd>(
      set.true_overlap.data(), static_cast<Eigen::Index>(set.true_overlap.size()));
  std::vector<int> truth = top_k_indices(overlap, spec.k);

  AlignRunParams params{spec.k, spec.mode, spec.reuse_samples, spec.m_max_factor,
                        spec.spectral};
  return run_align_rows_with_pool(std::move(pool), truth, params, budgets, trials,
                                  root_seed, threads);
}

// Threshold rows: exact_error is the sandwich-violation rate, top2k_recall
// is the recall of {u > beta}, and the budget column shows the nonadaptive
// cost n * ceil(t_C) both algorithms are compared against.
inline std::vector<RowResult> run_crowd_threshold_rows(const CrowdThresholdSpec& spec,
                                                       int trials, uint64_t root_seed,
                                                       int threads) {
  if (trials < 1) throw InvalidArgumentError("run_experiment: trials < 1");
  RankOneInstance fixed;
  if (!spec.new_instance_per_trial)
    fixed = gen_crowd_instance(spec.n, derive(root_seed, 0x10ULL));

  ThresholdConfig base;
  base.alpha = spec.alpha;
  base.beta = spec.beta;
  base.delta = spec.delta;
  base.spectral = spec.spectral;
  const double width = spec.beta - spec.alpha;
  const double t_c = 12.0 * std::log(static_cast<double>(spec.n)) /
                     (width * width * scaled_c4(spec.spectral));
  const uint64_t budget_ref = static_cast<uint64_t>(spec.n) *
                              static_cast<uint64_t>(std::ceil(t_c));

  std::vector<RowResult> rows;
  for (int algo = 0; algo < 2; ++algo) {
    const bool adaptive = algo == 0;
    std::vector<TrialOutcome> outs(static_cast<size_t>(trials));
    detail::parallel_for(trials, threads, [&](int64_t t) {
      uint64_t seed = detail::trial_seed(root_seed, adaptive ? 5 : 6, budget_ref, t);
      RankOneInstance inst = spec.new_instance_per_trial
                                 ? gen_crowd_instance(spec.n, derive(seed, 0x10ULL))
                                 : fixed;
      Eigen::VectorXd u = inst.u_vec();
      ThresholdConfig cfg = base;
      cfg.seed = derive(seed, 0x30ULL);
      RankOneSampler smp(inst, derive(seed, 0x20ULL), ~uint64_t{0});
      ThresholdResult r = adaptive ? adaptive_threshold(smp, cfg)
                                   : nonadaptive_threshold(smp, cfg);
      std::vector<bool> in_out(static_cast<size_t>(spec.n), false);
      for (int id : r.accepted) in_out[static_cast<size_t>(id)] = true;
      int violation = 0;
      int above = 0, above_hit = 0;
      for (int i = 0; i < spec.n; ++i) {
        if (u(i) > spec.beta) {
          ++above;
          if (in_out[static_cast<size_t>(i)]) ++above_hit;
          else violation = 1;
        } else if (u(i) <= spec.alpha && in_out[static_cast<size_t>(i)]) {
          violation = 1;
        }
      }
      TrialOutcome& o = outs[static_cast<size_t>(t)];
      o.exact = violation;
      o.recall = above == 0 ? 1.0 : static_cast<double>(above_hit) / above;
      o.pulls = static_cast<double>(smp.ledger().consumed());
    });
    rows.push_back(detail::aggregate_row(adaptive ? "adaptive" : "nonadaptive",
                                         budget_ref, trials, root_seed, std::move(outs),
                                         false));
  }
  return rows;
}

inline std::vector<CurvePoint> run_experiment(const ExperimentSpec& spec,
                                              const std::vector<uint64_t>& budgets,
                                              int trials, uint64_t root_seed,
                                              int threads = 1) {
  std::vector<RowResult> rows = std::visit(
      [&](const auto& s) -> std::vector<RowResult> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CrowdTopKSpec>)
          return run_crowd_topk_rows(s, budgets, trials, root_seed, threads);
        else if constexpr (std::is_same_v<T, AlignTopKSpec>)
          return run_align_topk_rows(s, budgets, trials, root_seed, threads);
        else
          return run_crowd_threshold_rows(s, trials, root_seed, threads);
      },
      spec);
  std::vector<CurvePoint> points;
  points.reserve(rows.size());
  for (RowResult& r : rows) points.push_back(std::move(r.point));
  return points;
}

// ---------- Constant calibration ----------

// Smallest constant scale with empirical (1 - delta) coverage: the unscaled
// half width shrinks by sqrt(scale), so match it to the (1 - delta) quantile
// of observed max errors.
inline double calibrate_constant_scale(
    const std::function<RankOneInstance(uint64_t)>& make_instance, int m_cols,
    int trials, double delta, const SpectralConfig& base, uint64_t seed) {
  if (trials < 2) throw InvalidArgumentError("calibrate_constant_scale: trials < 2");
  std::vector<double> max_err;
  max_err.reserve(static_cast<size_t>(trials));
  int n_items = 0;
  for (int t = 0; t < trials; ++t) {
    RankOneInstance inst = make_instance(derive(seed, 0xca1ULL, static_cast<uint64_t>(t)));
    n_items = inst.n_items();
    std::vector<int> ids(static_cast<size_t>(n_items));
    std::iota(ids.begin(), ids.end(), 0);
    ObservationMatrix obs =
        sample_observations(inst, ids, m_cols, derive(seed, 0x0b5ULL, static_cast<uint64_t>(t)));
    Eigen::MatrixXd x = transform_channel(obs.entries, inst.channel);
    SpectralConfig cfg = base;
    cfg.constant_scale = 1.0;
    cfg.v_hat_method = VHatMethod::SplitSvd;
    Eigen::VectorXd v = inst.v_vec(m_cols);
    SpectralEstimate est = estimate_split(x, v.norm(), cfg, &v);
    max_err.push_back((est.u_hat - inst.u_vec()).cwiseAbs().maxCoeff());
  }
  std::sort(max_err.begin(), max_err.end());
  auto rank = static_cast<size_t>(std::ceil((1.0 - delta) * trials));
  size_t idx = std::min(max_err.size() - 1, rank == 0 ? size_t{0} : rank - 1);
  double q = std::max(max_err[idx], 1e-12);
  SpectralConfig cfg = base;
  cfg.constant_scale = 1.0;
  double unscaled = confidence_half_width(n_items, m_cols, delta, cfg);
  double scale = (unscaled / q) * (unscaled / q);
  return std::max(scale, 1.0);
}

// ---------- CSV ----------

inline void write_csv(std::ostream& out, const std::vector<CurvePoint>& points,
                      const std::string& flags_comment) {
  if (!flags_comment.empty()) out << "# " << flags_comment << "\n";
  out << "algorithm,budget,trials,exact_error,exact_error_se,top2k_recall,mean_pulls,seed\n";
  out << std::setprecision(17);
  for (const CurvePoint& p : points) {
    out << p.algorithm << ',' << p.budget << ',' << p.trials << ',' << p.exact_error
        << ',' << p.exact_error_se << ',' << p.top2k_recall << ',' << p.mean_pulls << ','
        << p.seed << "\n";
  }
}

}  // namespace specbandit
