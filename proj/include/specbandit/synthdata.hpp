#pragma once

// Synthetic inputs: crowd instances with Beta(1,5) item qualities and
// Uniform(0,1) worker abilities, and planted read sets over a random genome
// where each read's true overlap with the reference is fixed by its offset.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "specbandit/common.hpp"
#include "specbandit/minhash.hpp"
#include "specbandit/model.hpp"

namespace specbandit {

// p_i ~ Beta(1,5) via inverse CDF, q_j ~ Uniform(0,1) streamed lazily.
inline RankOneInstance gen_crowd_instance(int n, uint64_t seed) {
  if (n < 1) throw InvalidArgumentError("gen_crowd_instance: n < 1");
  RankOneInstance inst;
  inst.channel = Channel::XorSymmetric;
  inst.c_lower = 0.0;
  inst.c_upper = 1.0;
  inst.stream = WorkerStream::Uniform;
  inst.stream_lo = 0.0;
  inst.stream_hi = 1.0;
  inst.stream_seed = derive(seed, 0x5742ULL);
  inst.p.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    inst.p[static_cast<size_t>(i)] =
        1.0 - std::pow(u01(derive(seed, 0xbe7aULL, static_cast<uint64_t>(i))), 0.2);
  return inst;
}

inline std::string gen_genome(int64_t g, uint64_t seed) {
  if (g < 1) throw InvalidArgumentError("gen_genome: length < 1");
  std::string out(static_cast<size_t>(g), 'A');
  for (int64_t i = 0; i < g; ++i)
    out[static_cast<size_t>(i)] = "ACGT"[uniform_index(
        derive(seed, 0x6e0eULL, static_cast<uint64_t>(i)), 4)];
  return out;
}

struct PlantedReadSet {
  Read reference;
  std::vector<Read> reads;  // targets first, then calibration (flagged)
  std::vector<double> true_overlap;  // per target, max(0, 1 - offset / L)
  int64_t genome_length = 0;
  int64_t read_length = 0;
  double noise_rate = 0.0;
};

namespace detail {

inline void substitute_bases(std::string& seq, double noise_rate, uint64_t seed) {
  if (noise_rate <= 0.0) return;
  for (size_t i = 0; i < seq.size(); ++i) {
    uint64_t h = derive(seed, 0x5010ULL, static_cast<uint64_t>(i));
    if (!bernoulli(h, noise_rate)) continue;
    int cur = base_code(seq[i]);
    int offset = 1 + static_cast<int>(uniform_index(mix64(h), 3));
    seq[i] = code_base((cur + offset) & 3);
  }
}

}  // namespace detail

// Reference = genome prefix of length L; target i copies genome[o_i, o_i+L)
// so a (1 - o_i/L) prefix of it matches the reference suffix; calibration
// reads are uniform random strings (zero overlap by construction).
inline PlantedReadSet gen_reads_with_overlaps(const std::string& genome, int64_t L,
                                              const std::vector<int64_t>& offsets,
                                              double noise_rate, int n_calibration,
                                              uint64_t seed) {
  const int64_t g = static_cast<int64_t>(genome.size());
  if (L < 1 || L > g) throw InvalidArgumentError("gen_reads_with_overlaps: bad read length");
  if (noise_rate < 0.0 || noise_rate >= 1.0)
    throw InvalidArgumentError("gen_reads_with_overlaps: noise_rate out of [0, 1)");
  if (n_calibration < 0)
    throw InvalidArgumentError("gen_reads_with_overlaps: negative calibration count");

  PlantedReadSet set;
  set.genome_length = g;
  set.read_length = L;
  set.noise_rate = noise_rate;
  set.reference = Read{"ref", genome.substr(0, static_cast<size_t>(L)), false};

  for (size_t i = 0; i < offsets.size(); ++i) {
    int64_t o = offsets[i];
    if (o < 0 || o + L > g)
      throw InvalidArgumentError("gen_reads_with_overlaps: offset " + std::to_string(o) +
                                 " places read outside the genome");
    std::string seq = genome.substr(static_cast<size_t>(o), static_cast<size_t>(L));
    detail::substitute_bases(seq, noise_rate, derive(seed, 0x12eaULL, static_cast<uint64_t>(i)));
    set.reads.push_back(Read{"read" + std::to_string(i), std::move(seq), false});
    set.true_overlap.push_back(
        std::max(0.0, 1.0 - static_cast<double>(o) / static_cast<double>(L)));
  }
  for (int i = 0; i < n_calibration; ++i) {
    std::string seq(static_cast<size_t>(L), 'A');
    for (int64_t j = 0; j < L; ++j)
      seq[static_cast<size_t>(j)] = "ACGT"[uniform_index(
          derive(derive(seed, 0xca1ULL, static_cast<uint64_t>(i)), 0x6a5eULL,
                 static_cast<uint64_t>(j)),
          4)];
    set.reads.push_back(Read{"cal" + std::to_string(i), std::move(seq), true});
  }
  return set;
}

struct LayoutParams {
  int n_reads = 300;
  int k_top = 5;
  int k_mid = 5;
  double top_high = 0.85;   // best planted overlap; steps down by top_step
  double top_step = 0.01;
  double mid_high = 0.55;
  double mid_step = 0.01;
};

// Offsets realizing the planted structure: k_top reads near the top overlap,
// k_mid moderately overlapping, the rest sampled from the zero-overlap part
// of the genome.
inline std::vector<int64_t> default_layout(const LayoutParams& params, int64_t genome_length,
                                           int64_t L, uint64_t seed) {
  if (params.k_top + params.k_mid > params.n_reads)
    throw InvalidArgumentError("default_layout: k_top + k_mid > n_reads");
  if (genome_length < 2 * L)
    throw InvalidArgumentError("default_layout: genome shorter than 2 read lengths");
  std::vector<int64_t> offsets;
  offsets.reserve(static_cast<size_t>(params.n_reads));
  auto offset_for = [&](double p) {
    auto o = static_cast<int64_t>(std::llround((1.0 - p) * static_cast<double>(L)));
    return std::clamp<int64_t>(o, 0, genome_length - L);
  };
  for (int i = 0; i < params.k_top; ++i)
    offsets.push_back(offset_for(params.top_high - i * params.top_step));
  for (int i = 0; i < params.k_mid; ++i)
    offsets.push_back(offset_for(params.mid_high - i * params.mid_step));
  const int n_zero = params.n_reads - params.k_top - params.k_mid;
  for (int i = 0; i < n_zero; ++i) {
    uint64_t h = derive(seed, 0x2e20ULL, static_cast<uint64_t>(i));
    int64_t span = genome_length - 2 * L + 1;
    offsets.push_back(L + static_cast<int64_t>(uniform_index(h, static_cast<uint64_t>(span))));
  }
  return offsets;
}

}  // namespace specbandit
