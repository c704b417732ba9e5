#pragma once

// Shared plumbing: error types, deterministic counter-based randomness, and
// small ranking helpers used across the library.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace specbandit {

// Bad call arguments: shape mismatches, out-of-range parameters, unknown ids.
class InvalidArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed external data (FASTA, sketch files, value files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Power iteration did not reach the requested residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual_achieved)
      : std::runtime_error(what), residual(residual_achieved) {}
  double residual;
};

// A sampler draw would push consumed pulls past the configured limit.
class BudgetExceededError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// Every random draw in the library is a pure function of a 64-bit root seed
// plus a few stream/counter words, mixed down by the SplitMix64 finalizer.
// This makes any (row, column) block reproducible independently of call
// order or thread scheduling, and keeps streams identical across platforms
// (std::* distributions are not bit-stable and are avoided on purpose).

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

constexpr uint64_t derive(uint64_t seed, uint64_t a) {
  return mix64(mix64(seed + kGolden) + a);
}
constexpr uint64_t derive(uint64_t seed, uint64_t a, uint64_t b) {
  return mix64(derive(seed, a) + b);
}
constexpr uint64_t derive(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
  return mix64(derive(seed, a, b) + c);
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double u01(uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

// Bernoulli(p) decided by an integer threshold compare, so results do not
// depend on floating-point rounding of (h / 2^64 < p).
inline bool bernoulli(uint64_t h, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return h < static_cast<uint64_t>(p * 0x1.0p64);
}

// Uniform integer in [0, n) for shuffles and padding picks.
inline uint64_t uniform_index(uint64_t h, uint64_t n) {
  return static_cast<uint64_t>(u01(h) * static_cast<double>(n)) % n;
}

// Fisher-Yates shuffle driven by the counter scheme.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, uint64_t seed) {
  for (size_t i = v.size(); i > 1; --i) {
    uint64_t j = uniform_index(derive(seed, 0x7355ULL, i), i);
    std::swap(v[i - 1], v[j]);
  }
}

// ---------------------------------------------------------------------------
// Ranking helpers. Ties are always broken toward the smaller index so that
// selections are deterministic.

// Indices of the k largest values, best first.
inline std::vector<int> top_k_indices(const Eigen::VectorXd& values, int k) {
  if (k < 0 || k > values.size())
    throw InvalidArgumentError("top_k_indices: k out of range");
  std::vector<int> idx(static_cast<size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  idx.resize(static_cast<size_t>(k));
  return idx;
}

inline double vector_mean(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.mean();
}

// Pearson correlation; returns 0 when either side is constant.
inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw InvalidArgumentError("correlation: size mismatch");
  Eigen::VectorXd da = a.array() - a.mean();
  Eigen::VectorXd db = b.array() - b.mean();
  double na = da.norm(), nb = db.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return da.dot(db) / (na * nb);
}

}  // namespace specbandit
