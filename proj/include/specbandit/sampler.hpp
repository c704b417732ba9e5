#pragma once

// Budget-accounted sampling for the adaptive algorithms.
//
// A Sampler owns a global column cursor: each draw hands out the next block
// of fresh columns for the requested items and charges |items| * n_cols
// pulls to its ledger. Because draws are keyed by (item id, global column),
// blocks are reproducible and disjoint item sets compose consistently.
// column_info() reports what is knowable about v over a column range:
// an exact norm (oracle), a calibration-backed estimate, or nothing.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "specbandit/common.hpp"
#include "specbandit/model.hpp"

namespace specbandit {

class BudgetLedger {
 public:
  explicit BudgetLedger(uint64_t limit) : limit_(limit) {}

  void charge(uint64_t pulls) {
    if (pulls > limit_ - consumed_)
      throw BudgetExceededError("budget ledger: charge past limit");
    consumed_ += pulls;
  }
  uint64_t consumed() const { return consumed_; }
  uint64_t limit() const { return limit_; }
  uint64_t remaining() const { return limit_ - consumed_; }

 private:
  uint64_t consumed_ = 0;
  uint64_t limit_;
};

// What a sampler knows about v over a column range.
struct ColumnInfo {
  std::optional<double> v_norm;            // ||v|| over the range
  std::optional<Eigen::VectorXd> v_reference;  // direction for sign alignment
};

class Sampler {
 public:
  explicit Sampler(uint64_t budget) : ledger_(budget) {}
  virtual ~Sampler() = default;

  virtual int item_count() const = 0;

  // Fresh columns [cursor, cursor + n_cols) for the given items.
  Eigen::MatrixXd draw(std::span<const int> item_ids, int64_t n_cols) {
    if (n_cols < 0) throw InvalidArgumentError("draw: negative column count");
    ledger_.charge(static_cast<uint64_t>(item_ids.size()) * static_cast<uint64_t>(n_cols));
    Eigen::MatrixXd block = draw_block(item_ids, cursor_, n_cols);
    cursor_ += n_cols;
    return block;
  }

  virtual ColumnInfo column_info(int64_t col_begin, int64_t col_end) const = 0;

  int64_t columns_drawn() const { return cursor_; }
  BudgetLedger& ledger() { return ledger_; }
  const BudgetLedger& ledger() const { return ledger_; }

 protected:
  virtual Eigen::MatrixXd draw_block(std::span<const int> item_ids, int64_t col_begin,
                                     int64_t n_cols) = 0;

 private:
  BudgetLedger ledger_;
  int64_t cursor_ = 0;
};

// Synthetic sampler over a rank-one instance. Worker parameters come from
// the instance (fixed prefix plus stream rule), so unboundedly many fresh
// columns exist for the channels used in experiments. v information is
// oracle: exact norms and the true v direction over any range.
class RankOneSampler : public Sampler {
 public:
  RankOneSampler(RankOneInstance instance, uint64_t draw_seed, uint64_t budget)
      : Sampler(budget), inst_(std::move(instance)), seed_(draw_seed) {}

  int item_count() const override { return inst_.n_items(); }

  ColumnInfo column_info(int64_t col_begin, int64_t col_end) const override {
    ColumnInfo info;
    Eigen::VectorXd v = inst_.v_vec(static_cast<int>(col_end - col_begin),
                                    static_cast<int>(col_begin));
    info.v_norm = v.norm();
    info.v_reference = std::move(v);
    return info;
  }

  const RankOneInstance& instance() const { return inst_; }

 protected:
  Eigen::MatrixXd draw_block(std::span<const int> item_ids, int64_t col_begin,
                             int64_t n_cols) override {
    return sample_observation_block(inst_, item_ids, col_begin, n_cols, seed_).entries;
  }

 private:
  RankOneInstance inst_;
  uint64_t seed_;
};

// Ledger accounting only: zero-filled blocks, unit v. Pairs with injected
// exact estimators in tests, where only budget arithmetic is under test.
class NullSampler : public Sampler {
 public:
  NullSampler(int n_items, uint64_t budget) : Sampler(budget), n_(n_items) {}

  int item_count() const override { return n_; }

  ColumnInfo column_info(int64_t col_begin, int64_t col_end) const override {
    ColumnInfo info;
    info.v_norm = col_end > col_begin ? std::sqrt(static_cast<double>(col_end - col_begin)) : 0.0;
    return info;
  }

 protected:
  Eigen::MatrixXd draw_block(std::span<const int> item_ids, int64_t /*col_begin*/,
                             int64_t n_cols) override {
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(item_ids.size()), n_cols);
  }

 private:
  int n_;
};

}  // namespace specbandit
