#pragma once

// Top-k identification by sequential halving with spectral scoring.
//
// Theory mode follows the analyzed schedule exactly: fresh columns each
// round, r_max + 1 = ceil(log2(n / sqrt(T))) halving rounds spending at most
// T/2 in total, then a clean-up batch of floor(T / (2 |I|)) columns on the
// survivors. Practical mode keeps halving until fewer than 2k arms remain,
// reuses previously drawn columns for survivors, and optionally caps the
// per-item measurement count (m_max), returning the current top k when the
// cap would be exceeded. Both modes never pull past the budget T.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specbandit/common.hpp"
#include "specbandit/sampler.hpp"
#include "specbandit/scoring.hpp"
#include "specbandit/spectral.hpp"

namespace specbandit {

enum class TopKMode { Theory, Practical };

struct TopKConfig {
  int k = 5;
  uint64_t budget = 0;
  TopKMode mode = TopKMode::Practical;
  bool reuse_samples = true;                          // practical mode only
  int64_t m_max = 0;                                  // 0 = uncapped
  SpectralConfig spectral{.v_hat_method = VHatMethod::ColumnSum};
  ScoreFn estimator_override;                         // tests inject oracles
};

struct TopKResult {
  std::vector<int> selection;  // k ids, best first
  uint64_t pulls_rounds = 0;
  uint64_t pulls_cleanup = 0;
  int rounds_run = 0;
  bool capped_by_m_max = false;
  std::vector<int> final_candidates;
  Eigen::VectorXd final_scores;  // aligned with final_candidates
  std::vector<std::string> warnings;
};

struct HalvingSchedule {
  int64_t rounds = 0;  // L = ceil(log2(n / sqrt(T))); r_max = rounds - 1
  std::vector<int64_t> sizes;  // |I_r| = ceil(n / 2^r), r = 0..rounds
  std::vector<int64_t> t;      // fresh columns per round, r = 0..rounds-1
  int64_t cleanup_cols = 0;    // floor(T / (2 |I_{r_max + 1}|))
};

// Integer-exact schedule: L is the smallest l >= 0 with 4^l * T >= n^2.
inline HalvingSchedule halving_schedule(uint64_t T, int64_t n) {
  if (n < 1 || T < 1) throw InvalidArgumentError("halving_schedule: need n, T >= 1");
  HalvingSchedule s;
  unsigned __int128 lhs = T;
  unsigned __int128 n2 = static_cast<unsigned __int128>(n) * static_cast<unsigned __int128>(n);
  int64_t L = 0;
  while (lhs < n2 && L < 62) {
    lhs *= 4;
    ++L;
  }
  s.rounds = L;
  s.sizes.resize(static_cast<size_t>(L) + 1);
  s.t.resize(static_cast<size_t>(L));
  for (int64_t r = 0; r <= L; ++r)
    s.sizes[static_cast<size_t>(r)] = (n + ((int64_t{1} << r) - 1)) >> r;
  for (int64_t r = 0; r < L; ++r)
    s.t[static_cast<size_t>(r)] =
        static_cast<int64_t>(T / (2ull * static_cast<uint64_t>(s.sizes[static_cast<size_t>(r)]) *
                                  static_cast<uint64_t>(L)));
  s.cleanup_cols = static_cast<int64_t>(
      T / (2ull * static_cast<uint64_t>(s.sizes[static_cast<size_t>(L)])));
  return s;
}

namespace detail {

inline std::vector<int> select_best(const std::vector<int>& ids,
                                    const Eigen::VectorXd& scores, int keep) {
  std::vector<int> order = top_k_indices(scores, keep);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(keep));
  for (int idx : order) out.push_back(ids[static_cast<size_t>(idx)]);
  return out;
}

// Drops ids/scores (and matrix rows, when given) down to the keep best,
// keeping all three aligned.
inline void shrink_to_best(std::vector<int>& ids, Eigen::VectorXd& scores,
                           Eigen::MatrixXd* rows, int keep) {
  std::vector<int> order = top_k_indices(scores, keep);
  std::vector<int> next_ids(static_cast<size_t>(keep));
  Eigen::VectorXd next_scores(keep);
  Eigen::MatrixXd next_rows;
  if (rows) next_rows.resize(keep, rows->cols());
  for (int r = 0; r < keep; ++r) {
    int src = order[static_cast<size_t>(r)];
    next_ids[static_cast<size_t>(r)] = ids[static_cast<size_t>(src)];
    next_scores(r) = scores(src);
    if (rows) next_rows.row(r) = rows->row(src);
  }
  ids = std::move(next_ids);
  scores = std::move(next_scores);
  if (rows) *rows = std::move(next_rows);
}

inline void validate_topk(const Sampler& sampler, const TopKConfig& cfg,
                          std::vector<std::string>& warnings) {
  int64_t n = sampler.item_count();
  if (n < 1) throw InvalidArgumentError("top-k: sampler has no items");
  if (cfg.k < 1 || cfg.k > n) throw InvalidArgumentError("top-k: k out of [1, n]");
  if (cfg.budget < 1) throw InvalidArgumentError("top-k: budget < 1");
  double T = static_cast<double>(cfg.budget);
  double dn = static_cast<double>(n);
  if (T < dn * std::log(std::max(2.0, dn)))
    warnings.push_back("budget below n log n: halving schedule may draw zero columns");
  if (T > dn * dn) warnings.push_back("budget above n^2: schedule degenerates to clean-up only");
  if (4.0 * cfg.k * cfg.k >= T) warnings.push_back("2k >= sqrt(T): outside analyzed regime");
}

}  // namespace detail

inline TopKResult sequential_halving_topk(Sampler& sampler, const TopKConfig& cfg) {
  TopKResult res;
  detail::validate_topk(sampler, cfg, res.warnings);
  const int64_t n = sampler.item_count();
  const uint64_t T = cfg.budget;
  ScoreFn score = cfg.estimator_override ? cfg.estimator_override
                                         : spectral_score_fn(cfg.spectral);

  std::vector<int> ids(static_cast<size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(n);

  if (cfg.mode == TopKMode::Theory) {
    HalvingSchedule sched = halving_schedule(T, n);
    for (int64_t r = 0; r < sched.rounds; ++r) {
      if (static_cast<int64_t>(ids.size()) <= cfg.k) break;
      // Schedule with the actual survivor count (equal to ceil(n / 2^r)
      // in-regime; never smaller, so pulls stay within the analyzed cap).
      int64_t t = static_cast<int64_t>(
          T / (2ull * static_cast<uint64_t>(ids.size()) * static_cast<uint64_t>(sched.rounds)));
      if (t > 0) {
        int64_t begin = sampler.columns_drawn();
        Eigen::MatrixXd x = sampler.draw(ids, t);
        scores = score({x, ids, sampler.column_info(begin, begin + t)});
      } else {
        scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ids.size()));
      }
      int64_t keep = std::max<int64_t>((static_cast<int64_t>(ids.size()) + 1) / 2,
                                       cfg.k);
      detail::shrink_to_best(ids, scores, nullptr, static_cast<int>(keep));
      ++res.rounds_run;
    }
    res.pulls_rounds = sampler.ledger().consumed();

    int64_t cleanup_cols = static_cast<int64_t>(T / (2ull * static_cast<uint64_t>(ids.size())));
    if (cleanup_cols > 0) {
      int64_t begin = sampler.columns_drawn();
      Eigen::MatrixXd x = sampler.draw(ids, cleanup_cols);
      scores = score({x, ids, sampler.column_info(begin, begin + cleanup_cols)});
    }
    res.pulls_cleanup = sampler.ledger().consumed() - res.pulls_rounds;
    res.final_candidates = ids;
    res.final_scores = scores;
    res.selection = detail::select_best(ids, scores, cfg.k);
    return res;
  }

  // Practical mode: halve to < 2k arms, reuse previous columns for
  // survivors, cap per-item measurements at m_max.
  int64_t L;
  {
    HalvingSchedule sched = halving_schedule(T, n);
    if (sched.rounds >= 1) {
      L = sched.rounds;
    } else {
      // n <= sqrt(T): split the first budget half evenly over the rounds
      // needed to reach the 2k stop.
      L = 1;
      while ((n >> L) >= 2 * static_cast<int64_t>(cfg.k) && L < 62) ++L;
    }
  }

  Eigen::MatrixXd acc(static_cast<Eigen::Index>(n), 0);
  int64_t cols_acc = 0;       // columns of acc (reuse mode: all drawn so far)
  int64_t cols_per_item = 0;  // total measurements per surviving item
  auto estimate_current = [&](int64_t fresh_begin, int64_t fresh_cols) {
    if (cfg.reuse_samples) {
      scores = score({acc, ids, sampler.column_info(0, cols_acc)});
    } else {
      Eigen::MatrixXd fresh = acc.rightCols(fresh_cols);
      scores = score({fresh, ids, sampler.column_info(fresh_begin, fresh_begin + fresh_cols)});
    }
  };

  while (static_cast<int64_t>(ids.size()) >= 2 * static_cast<int64_t>(cfg.k) &&
         static_cast<int64_t>(ids.size()) > cfg.k) {
    int64_t size = static_cast<int64_t>(ids.size());
    int64_t t = static_cast<int64_t>(
        T / (2ull * static_cast<uint64_t>(size) * static_cast<uint64_t>(L)));
    int64_t affordable = static_cast<int64_t>(sampler.ledger().remaining() /
                                              static_cast<uint64_t>(size));
    t = std::min(t, affordable);
    if (t <= 0) break;
    if (cfg.m_max > 0 && cols_per_item + t > cfg.m_max) {
      res.capped_by_m_max = true;
      break;
    }
    int64_t begin = sampler.columns_drawn();
    Eigen::MatrixXd fresh = sampler.draw(ids, t);
    acc.conservativeResize(Eigen::NoChange, cols_acc + t);
    acc.rightCols(t) = fresh;
    cols_acc += t;
    cols_per_item += t;
    estimate_current(begin, t);

    int64_t keep = std::max<int64_t>((size + 1) / 2, cfg.k);
    detail::shrink_to_best(ids, scores, &acc, static_cast<int>(keep));
    ++res.rounds_run;
  }
  res.pulls_rounds = sampler.ledger().consumed();

  if (!res.capped_by_m_max) {
    int64_t extra = static_cast<int64_t>(sampler.ledger().remaining() /
                                         static_cast<uint64_t>(ids.size()));
    if (cfg.m_max > 0) extra = std::min(extra, cfg.m_max - cols_per_item);
    if (extra > 0) {
      int64_t begin = sampler.columns_drawn();
      Eigen::MatrixXd fresh = sampler.draw(ids, extra);
      acc.conservativeResize(Eigen::NoChange, cols_acc + extra);
      acc.rightCols(extra) = fresh;
      cols_acc += extra;
      cols_per_item += extra;
      estimate_current(begin, extra);
    }
  }
  res.pulls_cleanup = sampler.ledger().consumed() - res.pulls_rounds;
  res.final_candidates = ids;
  res.final_scores = scores;
  res.selection = detail::select_best(ids, scores, cfg.k);
  return res;
}

// One draw of floor(T/n) columns for every item, spectral scores, top k.
inline TopKResult nonadaptive_topk(Sampler& sampler, uint64_t T, int k,
                                   const TopKConfig& cfg) {
  TopKResult res;
  const int64_t n = sampler.item_count();
  if (n < 1) throw InvalidArgumentError("nonadaptive_topk: sampler has no items");
  if (k < 1 || k > n) throw InvalidArgumentError("nonadaptive_topk: k out of [1, n]");
  int64_t m = static_cast<int64_t>(T / static_cast<uint64_t>(n));
  if (m < 1) throw InvalidArgumentError("nonadaptive_topk: budget below one column (T < n)");
  ScoreFn score = cfg.estimator_override ? cfg.estimator_override
                                         : spectral_score_fn(cfg.spectral);
  std::vector<int> ids(static_cast<size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  int64_t begin = sampler.columns_drawn();
  Eigen::MatrixXd x = sampler.draw(ids, m);
  Eigen::VectorXd scores = score({x, ids, sampler.column_info(begin, begin + m)});
  res.pulls_rounds = sampler.ledger().consumed();
  res.final_candidates = ids;
  res.final_scores = scores;
  res.selection = detail::select_best(ids, scores, k);
  res.rounds_run = 0;
  return res;
}

}  // namespace specbandit
