#pragma once

// Glue between samplers and the spectral estimator: a score function maps a
// drawn block (plus whatever is known about v over those columns) to one
// score per row. The adaptive algorithms take these as injectable hooks so
// tests can swap in exact oracles.

#include <functional>

#include <Eigen/Core>

#include "specbandit/common.hpp"
#include "specbandit/sampler.hpp"
#include "specbandit/spectral.hpp"

namespace specbandit {

struct EstimatorInput {
  const Eigen::MatrixXd& x;       // rows follow item_ids order
  std::span<const int> item_ids;  // global item ids
  ColumnInfo info;                // v knowledge over x's columns
};

// Returns one score per row of x, larger = better. Injectable in tests.
using ScoreFn = std::function<Eigen::VectorXd(const EstimatorInput&)>;

// Default scorer: spectral estimate per the config, with deterministic
// fallbacks so adaptive rounds never die on degenerate submatrices
// (all-zero halves, zero column sums, tied spectra): those fall back to row
// averages, and an empty column range scores everything zero.
inline ScoreFn spectral_score_fn(SpectralConfig cfg) {
  return [cfg](const EstimatorInput& in) -> Eigen::VectorXd {
    if (in.x.cols() == 0) return Eigen::VectorXd::Zero(in.x.rows());
    if (in.x.rows() == 1) return row_average_scores(in.x);
    const Eigen::VectorXd* ref =
        in.info.v_reference ? &*in.info.v_reference : nullptr;
    try {
      return estimate(in.x, in.info.v_norm, cfg, ref).u_hat;
    } catch (const InvalidArgumentError&) {
      return row_average_scores(in.x);
    } catch (const ConvergenceError&) {
      return row_average_scores(in.x);
    }
  };
}

}  // namespace specbandit
