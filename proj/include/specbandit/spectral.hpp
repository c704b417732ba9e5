#pragma once

// Split-matrix spectral estimation for rank-one response models.
//
// Items are scored by a matched filter against an estimate of the worker
// direction: u_hat_i = X_i . v_hat / (||v_hat|| ||v||). To keep the noise of
// v_hat independent of the row it scores, the rows are split in half and
// each half is scored with the other half's leading right singular vector.
//
// Entrywise confidence half-widths follow the inversion
//   Gamma(delta) = sqrt((log(1/delta) + log(m+n+2)) / (C4s * min(m, n)))
// where C4s = constant_scale * C4(c_lower). The closed-form constant chain
// is deliberately conservative; constant_scale is an empirical multiplier
// (see calibrate_constant_scale in eval.hpp) and defaults to 1.

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "specbandit/common.hpp"

namespace specbandit {

// Closed-form constant chain, parametrized by the entry lower bound c.
struct ConstantSet {
  double c1, c2, c3, c4, c5;
};

inline ConstantSet constants(double c) {
  if (!(c > 0.0 && c < 1.0))
    throw InvalidArgumentError("constants: c must be in (0, 1)");
  ConstantSet k{};
  double c2 = c * c;
  double c4p = c2 * c2;
  k.c2 = c4p / 48.0;
  k.c3 = 4.0 / c4p + 30.0 * std::sqrt(2.0);
  k.c4 = c2 * std::min(1.0 / 18.0, k.c2 / 9.0);
  double inv = c / (6.0 * k.c3);
  k.c1 = std::min(k.c4, inv * inv);
  k.c5 = k.c1 / 64.0;
  return k;
}

enum class VHatMethod { SplitSvd, ColumnSum };

struct SpectralConfig {
  double c_lower = 0.05;
  double constant_scale = 1.0;  // empirical multiplier on C4; CI widths only
  int power_max_iters = 1000;
  double power_tol = 1e-10;
  VHatMethod v_hat_method = VHatMethod::SplitSvd;
};

struct SpectralEstimate {
  Eigen::VectorXd u_hat;
  std::optional<double> ci_half_width;  // valid as a bound when m <= n
  double v_norm_used = 0.0;
};

inline double scaled_c4(const SpectralConfig& cfg) {
  double c4 = constants(cfg.c_lower).c4 * cfg.constant_scale;
  if (!(c4 > 0.0)) throw InvalidArgumentError("confidence constants degenerate");
  return c4;
}

// Gamma(delta) for one fixed item.
inline double confidence_half_width(int n, int m, double delta,
                                    const SpectralConfig& cfg) {
  if (n < 1 || m < 1) throw InvalidArgumentError("confidence_half_width: empty matrix");
  if (!(delta > 0.0 && delta < 1.0))
    throw InvalidArgumentError("confidence_half_width: delta out of (0, 1)");
  double num = std::log(1.0 / delta) + std::log(static_cast<double>(m) + n + 2);
  return std::sqrt(num / (scaled_c4(cfg) * std::min(m, n)));
}

// Uniform-over-items width at delta = 1/n^3: numerator 3 log n + 2 log(m+n).
inline double confidence_half_width_all_items(int n, int m,
                                              const SpectralConfig& cfg) {
  if (n < 2 || m < 1)
    throw InvalidArgumentError("confidence_half_width_all_items: need n >= 2, m >= 1");
  double num = 3.0 * std::log(static_cast<double>(n)) +
               2.0 * std::log(static_cast<double>(m) + n);
  return std::sqrt(num / (scaled_c4(cfg) * std::min(m, n)));
}

// ---------------------------------------------------------------------------
// Power iteration on X^T X.
//
// Start vector is all-ones normalized, so runs are deterministic. If the
// start is (numerically) annihilated, restart from a fixed pseudorandom
// direction. Convergence is declared when ||X^T X v - lambda v|| <=
// tol * max(lambda, eps); otherwise a ConvergenceError carries the residual.
// The returned vector has unit norm, nonnegative entry sum, and ties
// (exactly zero sum) are broken toward a positive first nonzero entry.

inline Eigen::VectorXd leading_right_singular_vector(const Eigen::MatrixXd& x,
                                                     const SpectralConfig& cfg) {
  const Eigen::Index m = x.cols();
  if (x.rows() < 1 || m < 1)
    throw InvalidArgumentError("leading_right_singular_vector: empty matrix");
  double frob2 = x.squaredNorm();
  if (frob2 == 0.0)
    throw InvalidArgumentError("leading_right_singular_vector: zero matrix");

  Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  int restarts = 0;
  for (int it = 0; it < cfg.power_max_iters; ++it) {
    Eigen::VectorXd y = x.transpose() * (x * v);
    double ynorm = y.norm();
    if (ynorm <= 1e-14 * frob2) {
      // Start direction lies in (numerical) null space; deterministic restart.
      if (++restarts > static_cast<int>(m) + 2)
        throw ConvergenceError("power iteration: no non-null start found", residual);
      for (Eigen::Index j = 0; j < m; ++j)
        v[j] = u01(derive(0x9d2c5680ULL, static_cast<uint64_t>(restarts),
                          static_cast<uint64_t>(j))) -
               0.5;
      v.normalize();
      continue;
    }
    Eigen::VectorXd vnext = y / ynorm;
    lambda = v.dot(y);
    residual = (y - lambda * v).norm();
    v = vnext;
    if (residual <= cfg.power_tol * std::max(lambda, 1e-300)) {
      if (v.sum() < 0.0) {
        v = -v;
      } else if (v.sum() == 0.0) {
        for (Eigen::Index j = 0; j < m; ++j) {
          if (v[j] != 0.0) {
            if (v[j] < 0.0) v = -v;
            break;
          }
        }
      }
      return v;
    }
  }
  throw ConvergenceError(
      "power iteration: residual " + std::to_string(residual) + " after " +
          std::to_string(cfg.power_max_iters) + " iterations",
      residual);
}

// Mean of each row; ordering-faithful when all v_j share a sign, but biased
// as an estimate of u (the v-profile is not deconvolved).
inline Eigen::VectorXd row_average_scores(const Eigen::MatrixXd& x) {
  if (x.rows() < 1 || x.cols() < 1)
    throw InvalidArgumentError("row_average_scores: empty matrix");
  return x.rowwise().mean();
}

namespace detail {

// Fixes the global sign of u_hat. The row-average correlation rule repairs
// unlucky orientations whenever v has a dominant sign; when a v-space
// reference (oracle v or calibration direction) is supplied it wins, since
// mixed-sign v makes the correlation rule self-confirming.
inline void fix_global_sign(Eigen::VectorXd& u_hat, Eigen::VectorXd& v_hat,
                            const Eigen::MatrixXd& x,
                            const Eigen::VectorXd* v_sign_reference) {
  Eigen::VectorXd row_avg = row_average_scores(x);
  if (correlation(u_hat, row_avg) < 0.0) {
    u_hat = -u_hat;
    v_hat = -v_hat;
  }
  if (v_sign_reference != nullptr) {
    if (v_sign_reference->size() != v_hat.size())
      throw InvalidArgumentError("sign reference length mismatch");
    if (v_hat.dot(*v_sign_reference) < 0.0) {
      u_hat = -u_hat;
      v_hat = -v_hat;
    }
  }
}

}  // namespace detail

// Split estimator. Rows are split positionally: A = first ceil(n/2) rows,
// B = the rest. Each half is scored with the other half's singular vector,
// so u_hat_i is a linear filter of row i with coefficients independent of
// row i's noise. v_norm must be ||v|| over exactly the columns of x.
inline SpectralEstimate estimate_split(const Eigen::MatrixXd& x, double v_norm,
                                       const SpectralConfig& cfg,
                                       const Eigen::VectorXd* v_sign_reference = nullptr) {
  const Eigen::Index n = x.rows(), m = x.cols();
  if (n < 2 || m < 1)
    throw InvalidArgumentError("estimate_split: need at least 2 rows, 1 column");
  if (!(v_norm > 0.0)) throw InvalidArgumentError("estimate_split: v_norm must be > 0");
  const Eigen::Index na = (n + 1) / 2;
  auto xa = x.topRows(na);
  auto xb = x.bottomRows(n - na);
  if (xa.squaredNorm() == 0.0 || xb.squaredNorm() == 0.0)
    throw InvalidArgumentError("estimate_split: degenerate all-zero half");

  Eigen::VectorXd va = leading_right_singular_vector(xa, cfg);
  Eigen::VectorXd vb = leading_right_singular_vector(xb, cfg);
  // Both halves estimate the same direction; align them so the interleaved
  // u_hat carries one coherent global sign.
  if (va.dot(vb) < 0.0) vb = -vb;

  SpectralEstimate est;
  est.v_norm_used = v_norm;
  est.u_hat.resize(n);
  est.u_hat.head(na) = xa * vb / (vb.norm() * v_norm);
  est.u_hat.tail(n - na) = xb * va / (va.norm() * v_norm);
  detail::fix_global_sign(est.u_hat, va, x, v_sign_reference);
  est.ci_half_width =
      confidence_half_width_all_items(static_cast<int>(n), static_cast<int>(m), cfg);
  return est;
}

// Column-sum estimator (no SVD): v_hat proportional to column sums of X.
// With v_norm supplied the scores are unbiased estimates of u; without it
// they are ordering-valid scores only and no CI is attached.
inline SpectralEstimate estimate_column_sum(const Eigen::MatrixXd& x,
                                            std::optional<double> v_norm,
                                            const SpectralConfig& cfg,
                                            const Eigen::VectorXd* v_sign_reference = nullptr) {
  const Eigen::Index n = x.rows(), m = x.cols();
  if (n < 1 || m < 1) throw InvalidArgumentError("estimate_column_sum: empty matrix");
  Eigen::VectorXd cs = x.colwise().sum();
  double cn = cs.norm();
  if (cn == 0.0)
    throw InvalidArgumentError("estimate_column_sum: zero column sums");
  Eigen::VectorXd v_hat = cs / cn;

  SpectralEstimate est;
  est.u_hat = x * v_hat;
  if (v_norm) {
    if (!(*v_norm > 0.0))
      throw InvalidArgumentError("estimate_column_sum: v_norm must be > 0");
    est.u_hat /= *v_norm;
    est.v_norm_used = *v_norm;
  } else {
    est.v_norm_used = 1.0;
  }
  if (n >= 2) detail::fix_global_sign(est.u_hat, v_hat, x, v_sign_reference);
  if (v_norm && n >= 2)
    est.ci_half_width = confidence_half_width_all_items(static_cast<int>(n),
                                                        static_cast<int>(m), cfg);
  return est;
}

// Dispatch on the configured v_hat method. Without v_norm the result is an
// ordering-valid score vector and carries no CI.
inline SpectralEstimate estimate(const Eigen::MatrixXd& x, std::optional<double> v_norm,
                                 const SpectralConfig& cfg,
                                 const Eigen::VectorXd* v_sign_reference = nullptr) {
  if (cfg.v_hat_method == VHatMethod::ColumnSum || x.rows() < 2)
    return estimate_column_sum(x, v_norm, cfg, v_sign_reference);
  SpectralEstimate est = estimate_split(x, v_norm.value_or(1.0), cfg, v_sign_reference);
  if (!v_norm) est.ci_half_width.reset();
  return est;
}

}  // namespace specbandit
