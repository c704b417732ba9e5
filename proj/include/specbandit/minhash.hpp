#pragma once

// Min-hash k-mer machinery: packed k-mer sets, a bit-exact seeded 64-bit
// hash, per-read sketches (one minimum per seed), collision matrices against
// a reference read, the exact Jaccard oracle, zero-overlap calibration, and
// FASTA / binary sketch IO. A pooled Sampler exposes hash seeds as columns
// of the rank-one model (X = 1 - collision), so the same bandits that rank
// crowd items rank read overlaps.
//
// Hash contract (stable across platforms and releases): a k-mer is packed
// into a 64-bit code, two bits per base (A=0, C=1, G=2, T=3, first base most
// significant, k <= 31), and
//   kmer_hash(code, seed) = mix64(code ^ mix64(seed ^ 0x5851f42d4c957f2d))
// with mix64 the SplitMix64 finalizer from common.hpp. Sketch minima are
// minima of kmer_hash over the deduplicated k-mer code set.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "specbandit/common.hpp"
#include "specbandit/sampler.hpp"

namespace specbandit {

inline constexpr uint64_t kHashSalt = 0x5851f42d4c957f2dULL;

inline uint64_t kmer_hash(uint64_t code, uint64_t seed) {
  return mix64(code ^ mix64(seed ^ kHashSalt));
}

struct Read {
  std::string id;
  std::string sequence;  // uppercase ACGT
  bool is_calibration = false;
};

namespace detail {

inline int base_code(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
    default: return -1;
  }
}

inline char code_base(int code) { return "ACGT"[code & 3]; }

}  // namespace detail

// Deduplicated packed k-mer codes, sorted. With canonical=true each k-mer is
// replaced by min(code, reverse-complement code) before dedup.
inline std::vector<uint64_t> kmer_codes(std::string_view seq, int k,
                                        bool canonical = false) {
  if (k < 1 || k > 31) throw InvalidArgumentError("kmer_codes: k must be in [1, 31]");
  if (static_cast<int64_t>(seq.size()) < k)
    throw InvalidArgumentError("kmer_codes: sequence shorter than k");
  const uint64_t mask = (uint64_t{1} << (2 * k)) - 1;
  const int rc_shift = 2 * (k - 1);
  std::vector<uint64_t> codes;
  codes.reserve(seq.size() - static_cast<size_t>(k) + 1);
  uint64_t fwd = 0, rev = 0;
  int filled = 0;
  for (char c : seq) {
    int b = detail::base_code(c);
    if (b < 0) throw InvalidArgumentError(std::string("kmer_codes: invalid base '") + c + "'");
    fwd = ((fwd << 2) | static_cast<uint64_t>(b)) & mask;
    rev = (rev >> 2) | (static_cast<uint64_t>(3 - b) << rc_shift);
    if (++filled >= k) codes.push_back(canonical ? std::min(fwd, rev) : fwd);
  }
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  return codes;
}

// String view of the k-mer set, for tests and debugging.
inline std::vector<std::string> kmer_set(std::string_view seq, int k) {
  std::vector<uint64_t> codes = kmer_codes(seq, k);
  std::vector<std::string> out;
  out.reserve(codes.size());
  for (uint64_t code : codes) {
    std::string s(static_cast<size_t>(k), 'A');
    for (int i = k - 1; i >= 0; --i) {
      s[static_cast<size_t>(i)] = detail::code_base(static_cast<int>(code & 3));
      code >>= 2;
    }
    out.push_back(std::move(s));
  }
  return out;  // already sorted: packing preserves lexicographic order
}

inline double jaccard_exact(std::string_view s0, std::string_view s1, int k,
                            bool canonical = false) {
  std::vector<uint64_t> a = kmer_codes(s0, k, canonical);
  std::vector<uint64_t> b = kmer_codes(s1, k, canonical);
  size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) { ++inter; ++i; ++j; }
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct ReadSketch {
  std::string id;
  std::vector<uint64_t> minima;  // one per seed
  int k = 0;
  std::vector<uint64_t> seeds;
};

inline uint64_t minhash_value(const std::vector<uint64_t>& codes, uint64_t seed) {
  if (codes.empty()) throw InvalidArgumentError("minhash_value: empty k-mer set");
  const uint64_t mixed = mix64(seed ^ kHashSalt);
  uint64_t best = ~uint64_t{0};
  for (uint64_t code : codes) best = std::min(best, mix64(code ^ mixed));
  return best;
}

inline ReadSketch sketch(const Read& read, int k, const std::vector<uint64_t>& seeds,
                         bool canonical = false) {
  if (seeds.empty()) throw InvalidArgumentError("sketch: need at least one seed");
  ReadSketch s;
  s.id = read.id;
  s.k = k;
  s.seeds = seeds;
  std::vector<uint64_t> codes = kmer_codes(read.sequence, k, canonical);
  s.minima.reserve(seeds.size());
  for (uint64_t seed : seeds) s.minima.push_back(minhash_value(codes, seed));
  return s;
}

struct CollisionMatrix {
  Eigen::MatrixXd y;  // rows = reads, cols = seeds, entries in {0, 1}
  std::string reference_id;
};

inline CollisionMatrix collision_matrix(const Read& reference,
                                        const std::vector<Read>& reads, int k,
                                        const std::vector<uint64_t>& seeds,
                                        bool canonical = false) {
  ReadSketch ref = sketch(reference, k, seeds, canonical);
  CollisionMatrix cm;
  cm.reference_id = reference.id;
  cm.y.resize(static_cast<Eigen::Index>(reads.size()),
              static_cast<Eigen::Index>(seeds.size()));
  for (size_t i = 0; i < reads.size(); ++i) {
    ReadSketch s = sketch(reads[i], k, seeds, canonical);
    for (size_t j = 0; j < seeds.size(); ++j)
      cm.y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          s.minima[j] == ref.minima[j] ? 1.0 : 0.0;
  }
  return cm;
}

inline double jaccard_estimate(const Eigen::RowVectorXd& y_row) {
  if (y_row.size() == 0) throw InvalidArgumentError("jaccard_estimate: empty row");
  return y_row.mean();
}

// Calibration rows have (near-)zero overlap, so u = 1 - p is (near-)1 and
// the flipped entries X = 1 - Y average to v per column.
inline Eigen::VectorXd calibrate_v(const CollisionMatrix& cm,
                                   const std::vector<int>& calibration_ids) {
  if (calibration_ids.empty())
    throw InvalidArgumentError("calibrate_v: empty calibration set");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(cm.y.cols());
  for (int id : calibration_ids) {
    if (id < 0 || id >= cm.y.rows())
      throw InvalidArgumentError("calibrate_v: calibration id out of range");
    v += (1.0 - cm.y.row(id).array()).matrix().transpose();
  }
  return v / static_cast<double>(calibration_ids.size());
}

inline double calibrate_v_norm(const CollisionMatrix& cm,
                               const std::vector<int>& calibration_ids) {
  return calibrate_v(cm, calibration_ids).norm();
}

// ---------- FASTA ----------

inline std::vector<Read> parse_fasta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open");
  std::vector<Read> reads;
  std::string line;
  int64_t line_no = 0;
  auto flush_check = [&](int64_t header_line) {
    if (!reads.empty() && reads.back().sequence.empty())
      throw DataError(path + ":" + std::to_string(header_line) +
                      ": header with empty sequence");
  };
  int64_t last_header_line = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      flush_check(last_header_line);
      size_t start = line.find_first_not_of(" \t", 1);
      size_t end = start == std::string::npos ? start : line.find_first_of(" \t", start);
      std::string id = start == std::string::npos
                           ? std::string()
                           : line.substr(start, end == std::string::npos ? end : end - start);
      if (id.empty())
        throw DataError(path + ":" + std::to_string(line_no) + ": empty header id");
      reads.push_back(Read{id, "", false});
      last_header_line = line_no;
      continue;
    }
    if (reads.empty())
      throw DataError(path + ":" + std::to_string(line_no) + ": sequence before header");
    for (char& c : line) {
      char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (detail::base_code(up) < 0)
        throw DataError(path + ":" + std::to_string(line_no) +
                        ": invalid character '" + std::string(1, c) + "'");
      c = up;
    }
    reads.back().sequence += line;
  }
  flush_check(last_header_line);
  if (reads.empty()) throw DataError(path + ": no records");
  return reads;
}

inline void write_fasta(const std::string& path, const std::vector<Read>& reads,
                        size_t width = 70) {
  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing");
  for (const Read& r : reads) {
    out << '>' << r.id << '\n';
    for (size_t i = 0; i < r.sequence.size(); i += width)
      out << r.sequence.substr(i, width) << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

// ---------- Sketch file ----------
// Layout (little-endian): magic "SBSKETCH", u32 k, u64 seed count, seeds,
// then per read: u32 id length, id bytes, seed-count u64 minima, to EOF.

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

inline bool get_u32(std::istream& in, uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return true;
}

inline bool get_u64(std::istream& in, uint64_t& v) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) return false;
  v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return true;
}

inline constexpr char kSketchMagic[8] = {'S', 'B', 'S', 'K', 'E', 'T', 'C', 'H'};

}  // namespace detail

struct SketchSet {
  int k = 0;
  std::vector<uint64_t> seeds;
  std::vector<std::string> ids;
  std::vector<std::vector<uint64_t>> minima;  // aligned with ids
};

inline void save_sketches(const std::string& path, const SketchSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out.write(detail::kSketchMagic, 8);
  detail::put_u32(out, static_cast<uint32_t>(set.k));
  detail::put_u64(out, set.seeds.size());
  for (uint64_t s : set.seeds) detail::put_u64(out, s);
  for (size_t i = 0; i < set.ids.size(); ++i) {
    if (set.minima[i].size() != set.seeds.size())
      throw InvalidArgumentError("save_sketches: minima/seed count mismatch");
    detail::put_u32(out, static_cast<uint32_t>(set.ids[i].size()));
    out.write(set.ids[i].data(), static_cast<std::streamsize>(set.ids[i].size()));
    for (uint64_t m : set.minima[i]) detail::put_u64(out, m);
  }
  if (!out) throw DataError(path + ": write failed");
}

inline SketchSet load_sketches(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, detail::kSketchMagic))
    throw DataError(path + ": not a sketch file (bad magic)");
  SketchSet set;
  uint32_t k32 = 0;
  uint64_t n_seeds = 0;
  if (!detail::get_u32(in, k32) || !detail::get_u64(in, n_seeds))
    throw DataError(path + ": truncated header");
  set.k = static_cast<int>(k32);
  set.seeds.resize(n_seeds);
  for (uint64_t& s : set.seeds)
    if (!detail::get_u64(in, s)) throw DataError(path + ": truncated seed list");
  uint32_t id_len = 0;
  while (detail::get_u32(in, id_len)) {
    std::string id(id_len, '\0');
    if (!in.read(id.data(), id_len)) throw DataError(path + ": truncated read id");
    std::vector<uint64_t> minima(n_seeds);
    for (uint64_t& m : minima)
      if (!detail::get_u64(in, m)) throw DataError(path + ": truncated minima");
    set.ids.push_back(std::move(id));
    set.minima.push_back(std::move(minima));
  }
  return set;
}

// ---------- Pooled sampler ----------

// Sketches every read once against a fixed pool of hash seeds; individual
// trials then expose a shuffled subset of pool columns as their worker
// stream. Calibration reads are sketched too but are not sampler items:
// they supply the v direction and norm per column, free of charge.
class MinHashPool {
 public:
  MinHashPool(Read reference, std::vector<Read> reads, int k, int64_t pool_size,
              uint64_t seed, bool canonical = false)
      : k_(k), reference_(std::move(reference)) {
    if (pool_size < 1) throw InvalidArgumentError("MinHashPool: pool_size < 1");
    seeds_.resize(static_cast<size_t>(pool_size));
    for (int64_t j = 0; j < pool_size; ++j)
      seeds_[static_cast<size_t>(j)] = derive(seed, 0xa5edULL, static_cast<uint64_t>(j));

    ReadSketch ref = sketch(reference_, k, seeds_, canonical);
    std::vector<const Read*> cals;
    for (const Read& r : reads) {
      if (r.is_calibration) cals.push_back(&r);
      else targets_.push_back(r);
    }
    if (targets_.empty()) throw InvalidArgumentError("MinHashPool: no target reads");

    collide_.resize(targets_.size());
    for (size_t i = 0; i < targets_.size(); ++i) {
      ReadSketch s = sketch(targets_[i], k, seeds_, canonical);
      collide_[i].resize(static_cast<size_t>(pool_size));
      for (size_t j = 0; j < s.minima.size(); ++j)
        collide_[i][j] = s.minima[j] == ref.minima[j];
    }
    if (!cals.empty()) {
      v_hat_ = Eigen::VectorXd::Zero(pool_size);
      for (const Read* r : cals) {
        ReadSketch s = sketch(*r, k, seeds_, canonical);
        for (int64_t j = 0; j < pool_size; ++j)
          (*v_hat_)(j) += s.minima[static_cast<size_t>(j)] ==
                                  ref.minima[static_cast<size_t>(j)]
                              ? 0.0
                              : 1.0;
      }
      *v_hat_ /= static_cast<double>(cals.size());
    }
  }

  int k() const { return k_; }
  int64_t pool_size() const { return static_cast<int64_t>(seeds_.size()); }
  int64_t target_count() const { return static_cast<int64_t>(targets_.size()); }
  const std::vector<Read>& targets() const { return targets_; }
  const Read& reference() const { return reference_; }
  bool collides(int64_t item, int64_t pool_col) const {
    return collide_[static_cast<size_t>(item)][static_cast<size_t>(pool_col)];
  }
  const std::optional<Eigen::VectorXd>& v_hat_pool() const { return v_hat_; }

 private:
  int k_;
  Read reference_;
  std::vector<Read> targets_;
  std::vector<uint64_t> seeds_;
  std::vector<std::vector<bool>> collide_;   // targets x pool
  std::optional<Eigen::VectorXd> v_hat_;     // calibration mean of 1 - Y
};

class MinHashSampler final : public Sampler {
 public:
  MinHashSampler(std::shared_ptr<const MinHashPool> pool, uint64_t trial_seed,
                 uint64_t budget)
      : Sampler(budget), pool_(std::move(pool)) {
    perm_.resize(static_cast<size_t>(pool_->pool_size()));
    std::iota(perm_.begin(), perm_.end(), int64_t{0});
    deterministic_shuffle(perm_, derive(trial_seed, 0x5a17ULL));
  }

  int item_count() const override { return static_cast<int>(pool_->target_count()); }

  ColumnInfo column_info(int64_t col_begin, int64_t col_end) const override {
    ColumnInfo info;
    if (!pool_->v_hat_pool() || col_end <= col_begin) return info;
    check_range(col_begin, col_end);
    Eigen::VectorXd v(col_end - col_begin);
    for (int64_t j = col_begin; j < col_end; ++j)
      v(j - col_begin) = (*pool_->v_hat_pool())(perm_[static_cast<size_t>(j)]);
    info.v_norm = v.norm();
    info.v_reference = std::move(v);
    return info;
  }

 protected:
  Eigen::MatrixXd draw_block(std::span<const int> item_ids, int64_t col_begin,
                             int64_t n_cols) override {
    check_range(col_begin, col_begin + n_cols);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(item_ids.size()),
                      static_cast<Eigen::Index>(n_cols));
    for (size_t i = 0; i < item_ids.size(); ++i) {
      if (item_ids[i] < 0 || item_ids[i] >= pool_->target_count())
        throw InvalidArgumentError("MinHashSampler: item id out of range");
      for (int64_t c = 0; c < n_cols; ++c) {
        int64_t col = perm_[static_cast<size_t>(col_begin + c)];
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
            pool_->collides(item_ids[i], col) ? 0.0 : 1.0;
      }
    }
    return x;
  }

 private:
  void check_range(int64_t begin, int64_t end) const {
    if (begin < 0 || end > pool_->pool_size())
      throw InvalidArgumentError(
          "MinHashSampler: hash pool exhausted; rebuild with a larger pool");
  }

  std::shared_ptr<const MinHashPool> pool_;
  std::vector<int64_t> perm_;
};

}  // namespace specbandit
