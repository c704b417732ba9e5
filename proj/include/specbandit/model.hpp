#pragma once

// Rank-one response models.
//
// An instance is a vector of item parameters and a (possibly unbounded)
// stream of worker parameters. Observations are binary; after the per-channel
// transform the observation matrix X has E X = u v^T for the transformed
// vectors u (items) and v (workers):
//
//   Raw           X ~ Ber(u_i v_j),                    entries {0, 1}
//   OrZ           Y ~ Ber(p_i) OR Ber(q_j), X = 1 - Y, entries {0, 1},
//                 u = 1 - p, v = 1 - q
//   XorSymmetric  Y ~ Ber(p_i) XOR Ber(q_j), X = Y - 1/2,
//                 entries {-1/2, +1/2}, u = p - 1/2, v = 1 - 2q
//
// XorSymmetric u_i may be negative (p_i < 1/2); estimators downstream handle
// the resulting ordering/sign questions, this module only samples.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "specbandit/common.hpp"

namespace specbandit {

enum class Channel { Raw, OrZ, XorSymmetric };

// How worker parameters q_j for j >= q.size() are produced. FixedOnly
// instances error past the materialized prefix; stream instances derive
// q_j deterministically from (stream_seed, j), so unboundedly many columns
// can be drawn reproducibly and in any order.
enum class WorkerStream { FixedOnly, Constant, Uniform };

struct RankOneInstance {
  Channel channel = Channel::Raw;
  // Raw-space parameters. For Raw these are u and v themselves; for OrZ and
  // XorSymmetric they are the flip probabilities p (items) and q (workers).
  Eigen::VectorXd p;
  Eigen::VectorXd q;
  double c_lower = 0.05;
  double c_upper = 0.95;
  WorkerStream stream = WorkerStream::FixedOnly;
  double stream_lo = 0.0;
  double stream_hi = 1.0;
  uint64_t stream_seed = 0;

  int n_items() const { return static_cast<int>(p.size()); }

  double worker_raw_param(int j) const {
    if (j < 0) throw InvalidArgumentError("worker index negative");
    if (j < q.size()) return q[j];
    switch (stream) {
      case WorkerStream::FixedOnly:
        throw InvalidArgumentError("worker index past fixed worker vector");
      case WorkerStream::Constant:
        return stream_lo;
      case WorkerStream::Uniform:
        return stream_lo +
               (stream_hi - stream_lo) *
                   u01(derive(stream_seed, 0x3042ULL, static_cast<uint64_t>(j)));
    }
    return 0.0;
  }

  double u(int i) const {
    double pi = p[i];
    switch (channel) {
      case Channel::Raw: return pi;
      case Channel::OrZ: return 1.0 - pi;
      case Channel::XorSymmetric: return pi - 0.5;
    }
    return 0.0;
  }

  double v(int j) const {
    double qj = worker_raw_param(j);
    switch (channel) {
      case Channel::Raw: return qj;
      case Channel::OrZ: return 1.0 - qj;
      case Channel::XorSymmetric: return 1.0 - 2.0 * qj;
    }
    return 0.0;
  }

  Eigen::VectorXd u_vec() const {
    Eigen::VectorXd out(p.size());
    for (int i = 0; i < p.size(); ++i) out[i] = u(i);
    return out;
  }

  // Transformed worker vector for columns [col_begin, col_begin + m).
  Eigen::VectorXd v_vec(int m, int col_begin = 0) const {
    Eigen::VectorXd out(m);
    for (int j = 0; j < m; ++j) out[j] = v(col_begin + j);
    return out;
  }

  // Support of the transformed observations.
  double lo() const { return channel == Channel::XorSymmetric ? -0.5 : 0.0; }
  double hi() const { return channel == Channel::XorSymmetric ? 0.5 : 1.0; }
};

struct ObservationMatrix {
  Eigen::MatrixXd entries;  // row r corresponds to row_ids[r]
  double lo = 0.0;
  double hi = 1.0;
  uint64_t seed = 0;
};

namespace detail {
// Stream tags keeping the two Bernoulli draws of an entry independent.
constexpr uint64_t kItemBit = 0x11;
constexpr uint64_t kWorkerBit = 0x22;

inline double sample_entry(const RankOneInstance& inst, int row, int64_t col,
                           uint64_t seed) {
  switch (inst.channel) {
    case Channel::Raw: {
      double prob = inst.p[row] * inst.worker_raw_param(static_cast<int>(col));
      bool x = bernoulli(derive(seed, kItemBit, static_cast<uint64_t>(row),
                                static_cast<uint64_t>(col)),
                         prob);
      return x ? 1.0 : 0.0;
    }
    case Channel::OrZ: {
      bool a = bernoulli(derive(seed, kItemBit, static_cast<uint64_t>(row),
                                static_cast<uint64_t>(col)),
                         inst.p[row]);
      bool b = bernoulli(derive(seed, kWorkerBit, static_cast<uint64_t>(row),
                                static_cast<uint64_t>(col)),
                         inst.worker_raw_param(static_cast<int>(col)));
      return (a || b) ? 0.0 : 1.0;  // X = 1 - Y
    }
    case Channel::XorSymmetric: {
      bool a = bernoulli(derive(seed, kItemBit, static_cast<uint64_t>(row),
                                static_cast<uint64_t>(col)),
                         inst.p[row]);
      bool b = bernoulli(derive(seed, kWorkerBit, static_cast<uint64_t>(row),
                                static_cast<uint64_t>(col)),
                         inst.worker_raw_param(static_cast<int>(col)));
      return (a != b) ? 0.5 : -0.5;  // X = Y - 1/2
    }
  }
  return 0.0;
}
}  // namespace detail

// Draws the block of columns [col_begin, col_begin + n_cols) for the given
// rows. Entry (i, j) is a pure function of (seed, row_ids[i], col_begin + j),
// so disjoint row sets sampled separately agree with one big draw, and
// repeated calls with identical arguments return identical matrices.
inline ObservationMatrix sample_observation_block(const RankOneInstance& inst,
                                                  std::span<const int> row_ids,
                                                  int64_t col_begin, int64_t n_cols,
                                                  uint64_t seed) {
  if (n_cols < 0 || col_begin < 0)
    throw InvalidArgumentError("sample_observations: negative column range");
  for (int id : row_ids)
    if (id < 0 || id >= inst.n_items())
      throw InvalidArgumentError("sample_observations: unknown row id " + std::to_string(id));
  if (inst.stream == WorkerStream::FixedOnly && col_begin + n_cols > inst.q.size())
    throw InvalidArgumentError("sample_observations: column range past fixed worker vector");

  ObservationMatrix out;
  out.lo = inst.lo();
  out.hi = inst.hi();
  out.seed = seed;
  out.entries.resize(static_cast<Eigen::Index>(row_ids.size()), n_cols);
  for (size_t r = 0; r < row_ids.size(); ++r)
    for (int64_t j = 0; j < n_cols; ++j)
      out.entries(static_cast<Eigen::Index>(r), j) =
          detail::sample_entry(inst, row_ids[r], col_begin + j, seed);
  return out;
}

inline ObservationMatrix sample_observations(const RankOneInstance& inst,
                                             std::span<const int> row_ids,
                                             int64_t n_cols, uint64_t seed) {
  if (n_cols < 1) throw InvalidArgumentError("sample_observations: n_cols < 1");
  return sample_observation_block(inst, row_ids, 0, n_cols, seed);
}

// Applies the per-channel transform to a raw {0,1} response matrix Y.
inline Eigen::MatrixXd transform_channel(const Eigen::MatrixXd& y, Channel channel) {
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      if (y(i, j) != 0.0 && y(i, j) != 1.0)
        throw InvalidArgumentError("transform_channel: entries must be 0 or 1");
  switch (channel) {
    case Channel::Raw: return y;
    case Channel::OrZ: return Eigen::MatrixXd::Ones(y.rows(), y.cols()) - y;
    case Channel::XorSymmetric:
      return y.array() - 0.5;
  }
  return y;
}

// E X = u v^T over the first m workers.
inline Eigen::MatrixXd expected_matrix(const RankOneInstance& inst, int m) {
  if (m < 1) throw InvalidArgumentError("expected_matrix: m < 1");
  return inst.u_vec() * inst.v_vec(m).transpose();
}

}  // namespace specbandit
