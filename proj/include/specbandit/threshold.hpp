#pragma once

// Adaptive thresholding: classify every item as above/below a band [alpha,
// beta] using geometrically growing worker counts. Each round estimates the
// survivors with the split estimator, accepts items whose lower confidence
// edge clears alpha, rejects those whose upper edge stays under beta, and
// stops once fewer than kappa borderline items remain; those get a final
// clean-up batch sized for the band width. The nonadaptive baseline spends
// the clean-up-sized batch on everything at once.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specbandit/common.hpp"
#include "specbandit/sampler.hpp"
#include "specbandit/scoring.hpp"
#include "specbandit/spectral.hpp"

namespace specbandit {

// Distance of u from the accept/reject band: items far on either side are
// easy, items inside the band cost the full band width.
inline double gamma_gap(double u, double alpha, double beta) {
  if (!(alpha < beta)) throw InvalidArgumentError("gamma_gap: need alpha < beta");
  if (u > beta) return u - alpha;
  if (u < alpha) return beta - u;
  return beta - alpha;
}

struct ThresholdConfig {
  double alpha = 0.5;
  double beta = 0.65;
  double delta = 0.0;  // per-round CI failure probability; 0 = auto 1/n^3
  SpectralConfig spectral{};
  ScoreFn estimator_override;  // tests inject oracles
  // Tests inject C(t) -> 0 here; default is the uniform CI formula.
  std::function<double(int64_t rows, double t_real)> ci_override;
  uint64_t seed = 0;  // drives the borderline-set padding draw only
};

struct ThresholdResult {
  std::vector<int> accepted;  // sorted ids
  int rounds_run = 0;
  uint64_t pulls_rounds = 0;
  uint64_t pulls_cleanup = 0;
  int64_t kappa = 0;
  double t_cleanup = 0.0;            // real-valued worker count formula
  std::vector<double> t_values;      // t_r per executed round
  std::vector<int64_t> survivor_sizes;  // |S_r| at entry of each round
  std::vector<std::string> warnings;
};

namespace detail {

inline void validate_band(double alpha, double beta) {
  if (!(0.0 < alpha && alpha < beta && beta < 1.0))
    throw InvalidArgumentError("threshold: need 0 < alpha < beta < 1");
}

}  // namespace detail

inline ThresholdResult adaptive_threshold(Sampler& sampler, const ThresholdConfig& cfg) {
  detail::validate_band(cfg.alpha, cfg.beta);
  const int64_t n = sampler.item_count();
  if (n < 2) throw InvalidArgumentError("adaptive_threshold: need at least 2 items");

  ThresholdResult res;
  SpectralConfig spec_cfg = cfg.spectral;
  spec_cfg.v_hat_method = VHatMethod::SplitSvd;  // biased column sums break CI centering
  ScoreFn score = cfg.estimator_override ? cfg.estimator_override
                                         : spectral_score_fn(spec_cfg);
  const double c4s = scaled_c4(spec_cfg);
  const double width = cfg.beta - cfg.alpha;
  const double logn = std::log(static_cast<double>(n));
  const double delta = cfg.delta > 0.0
                           ? cfg.delta
                           : 1.0 / (static_cast<double>(n) * static_cast<double>(n) *
                                    static_cast<double>(n));
  res.kappa = static_cast<int64_t>(std::floor(12.0 * logn / (width * width * c4s)));
  res.t_cleanup = 12.0 * logn / (width * width * c4s);
  if (res.kappa >= n)
    res.warnings.push_back(
        "band narrower than the analyzed regime (kappa >= n): clean-up degenerates "
        "to a full nonadaptive pass");

  auto ci = [&](int64_t rows, double t_real, int64_t cols) {
    if (cfg.ci_override) return cfg.ci_override(rows, t_real);
    return confidence_half_width(rows, cols, delta, spec_cfg);
  };

  std::vector<int> survivors(static_cast<size_t>(n));
  std::iota(survivors.begin(), survivors.end(), 0);
  std::vector<int> accepted;    // A: grows monotonically
  std::vector<int> classified;  // accepted + rejected, classification order

  const int max_rounds =
      static_cast<int>(std::ceil(std::log2(1.0 / width)));
  double t_prev = 12.0 * logn / c4s;  // t_{-1}
  bool padded = false;

  for (int r = 0; r < max_rounds; ++r) {
    const double t_r = 4.0 * t_prev;
    t_prev = t_r;
    if (survivors.size() < 2) break;  // split estimator floor; go to clean-up
    res.t_values.push_back(t_r);
    res.survivor_sizes.push_back(static_cast<int64_t>(survivors.size()));
    const int64_t cols = static_cast<int64_t>(std::ceil(t_r));
    const int64_t begin = sampler.columns_drawn();
    Eigen::MatrixXd x = sampler.draw(survivors, cols);
    Eigen::VectorXd u_hat =
        score({x, survivors, sampler.column_info(begin, begin + cols)});
    const double half = ci(static_cast<int64_t>(survivors.size()), t_r, cols);

    std::vector<int> next;
    next.reserve(survivors.size());
    for (size_t i = 0; i < survivors.size(); ++i) {
      const double ui = u_hat(static_cast<Eigen::Index>(i));
      const bool acc = ui - half > cfg.alpha;
      const bool rej = ui + half < cfg.beta;
      if (acc) accepted.push_back(survivors[i]);
      if (acc || rej)
        classified.push_back(survivors[i]);
      else
        next.push_back(survivors[i]);
    }
    survivors = std::move(next);
    ++res.rounds_run;

    if (static_cast<int64_t>(survivors.size()) < res.kappa) {
      // Pad the borderline set with already-classified items so the
      // clean-up estimate has kappa rows to work with; their labels are
      // not revoked, but padded items can be (re-)accepted.
      std::vector<int> pool = classified;
      deterministic_shuffle(pool, derive(cfg.seed, 0x9ad5ULL));
      const int64_t target = std::min<int64_t>(res.kappa, n);
      for (int id : pool) {
        if (static_cast<int64_t>(survivors.size()) >= target) break;
        if (std::find(survivors.begin(), survivors.end(), id) == survivors.end())
          survivors.push_back(id);
      }
      padded = true;
      break;
    }
  }
  res.pulls_rounds = sampler.ledger().consumed();

  // Clean-up: one batch sized for the band width on whatever is left
  // (padded borderline set, or the loop-exhaustion remainder).
  if (!padded && !classified.empty() && survivors.size() < 2) {
    std::vector<int> pool = classified;
    deterministic_shuffle(pool, derive(cfg.seed, 0x9ad5ULL));
    for (int id : pool) {
      if (survivors.size() >= 2) break;
      if (std::find(survivors.begin(), survivors.end(), id) == survivors.end())
        survivors.push_back(id);
    }
  }
  if (!survivors.empty()) {
    const int64_t cols = static_cast<int64_t>(std::ceil(res.t_cleanup));
    const int64_t begin = sampler.columns_drawn();
    Eigen::MatrixXd x = sampler.draw(survivors, cols);
    Eigen::VectorXd u_hat =
        score({x, survivors, sampler.column_info(begin, begin + cols)});
    const double half = ci(static_cast<int64_t>(survivors.size()), res.t_cleanup, cols);
    for (size_t i = 0; i < survivors.size(); ++i)
      if (u_hat(static_cast<Eigen::Index>(i)) - half > cfg.alpha)
        accepted.push_back(survivors[i]);
  }
  res.pulls_cleanup = sampler.ledger().consumed() - res.pulls_rounds;

  std::sort(accepted.begin(), accepted.end());
  accepted.erase(std::unique(accepted.begin(), accepted.end()), accepted.end());
  res.accepted = std::move(accepted);
  return res;
}

// One batch sized so the CI after it is narrower than half the band, then a
// midpoint cut.
inline ThresholdResult nonadaptive_threshold(Sampler& sampler, const ThresholdConfig& cfg) {
  detail::validate_band(cfg.alpha, cfg.beta);
  const int64_t n = sampler.item_count();
  if (n < 2) throw InvalidArgumentError("nonadaptive_threshold: need at least 2 items");

  ThresholdResult res;
  SpectralConfig spec_cfg = cfg.spectral;
  spec_cfg.v_hat_method = VHatMethod::SplitSvd;
  ScoreFn score = cfg.estimator_override ? cfg.estimator_override
                                         : spectral_score_fn(spec_cfg);
  const double c4s = scaled_c4(spec_cfg);
  const double width = cfg.beta - cfg.alpha;
  const double logn = std::log(static_cast<double>(n));
  res.t_cleanup = 12.0 * logn / (width * width * c4s);
  const int64_t cols = static_cast<int64_t>(std::ceil(res.t_cleanup));

  std::vector<int> ids(static_cast<size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  const int64_t begin = sampler.columns_drawn();
  Eigen::MatrixXd x = sampler.draw(ids, cols);
  Eigen::VectorXd u_hat = score({x, ids, sampler.column_info(begin, begin + cols)});
  res.pulls_rounds = sampler.ledger().consumed();

  const double mid = 0.5 * (cfg.alpha + cfg.beta);
  for (int64_t i = 0; i < n; ++i)
    if (u_hat(static_cast<Eigen::Index>(i)) > mid)
      res.accepted.push_back(static_cast<int>(i));
  return res;
}

}  // namespace specbandit
