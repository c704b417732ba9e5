#include "specbandit/synthdata.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "specbandit/minhash.hpp"
#include "specbandit/model.hpp"

using namespace specbandit;

namespace {

TEST(CrowdInstance, QualityDistributionMoments) {
  RankOneInstance inst = gen_crowd_instance(100000, 4242);
  ASSERT_EQ(inst.p.size(), 100000);
  EXPECT_GE(inst.p.minCoeff(), 0.0);
  EXPECT_LE(inst.p.maxCoeff(), 1.0);
  // p = 1 - U^{1/5} is Beta(1,5); mean 1/6
  EXPECT_NEAR(inst.p.mean(), 1.0 / 6.0, 0.01);
}

TEST(CrowdInstance, ChannelAndWorkerStream) {
  RankOneInstance inst = gen_crowd_instance(10, 7);
  EXPECT_EQ(inst.channel, Channel::XorSymmetric);
  EXPECT_EQ(inst.stream, WorkerStream::Uniform);
  EXPECT_EQ(inst.n_items(), 10);
  for (int j = 0; j < 200; ++j) {
    double q = inst.worker_raw_param(j);
    EXPECT_GE(q, 0.0);
    EXPECT_LT(q, 1.0);
    EXPECT_DOUBLE_EQ(inst.v(j), 1.0 - 2.0 * q);
  }
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(inst.u(i), inst.p(i) - 0.5);

  RankOneInstance same = gen_crowd_instance(10, 7);
  EXPECT_TRUE((inst.p.array() == same.p.array()).all());
  EXPECT_DOUBLE_EQ(inst.worker_raw_param(5), same.worker_raw_param(5));
  RankOneInstance other = gen_crowd_instance(10, 8);
  EXPECT_TRUE((inst.p.array() != other.p.array()).any());

  EXPECT_THROW(gen_crowd_instance(0, 7), InvalidArgumentError);
}

TEST(Genome, AlphabetAndFrequencies) {
  std::string g = gen_genome(100000, 99);
  EXPECT_EQ(g.size(), 100000u);
  std::array<int64_t, 4> counts{};
  for (char c : g) {
    size_t b = std::string("ACGT").find(c);
    ASSERT_NE(b, std::string::npos) << "bad base " << c;
    ++counts[b];
  }
  for (int64_t c : counts) EXPECT_NEAR(static_cast<double>(c) / 100000.0, 0.25, 0.02);

  EXPECT_EQ(gen_genome(64, 5), gen_genome(64, 5));
  EXPECT_NE(gen_genome(64, 5), gen_genome(64, 6));
  EXPECT_THROW(gen_genome(0, 1), InvalidArgumentError);
}

TEST(PlantedReads, OverlapGeometry) {
  std::string genome = gen_genome(1500, 11);
  PlantedReadSet set = gen_reads_with_overlaps(genome, 500, {0, 250, 500, 1000}, 0.0, 0, 12);

  EXPECT_EQ(set.reference.id, "ref");
  EXPECT_EQ(set.reference.sequence, genome.substr(0, 500));
  EXPECT_EQ(set.genome_length, 1500);
  EXPECT_EQ(set.read_length, 500);
  EXPECT_DOUBLE_EQ(set.noise_rate, 0.0);

  ASSERT_EQ(set.reads.size(), 4u);
  ASSERT_EQ(set.true_overlap.size(), 4u);
  EXPECT_DOUBLE_EQ(set.true_overlap[0], 1.0);
  EXPECT_DOUBLE_EQ(set.true_overlap[1], 0.5);
  EXPECT_DOUBLE_EQ(set.true_overlap[2], 0.0);
  EXPECT_DOUBLE_EQ(set.true_overlap[3], 0.0);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(set.reads[i].id, "read" + std::to_string(i));
    EXPECT_FALSE(set.reads[i].is_calibration);
    EXPECT_EQ(set.reads[i].sequence.size(), 500u);
  }
  EXPECT_EQ(set.reads[0].sequence, set.reference.sequence);

  double j_full = jaccard_exact(set.reference.sequence, set.reads[0].sequence, 14);
  double j_half = jaccard_exact(set.reference.sequence, set.reads[1].sequence, 14);
  double j_edge = jaccard_exact(set.reference.sequence, set.reads[2].sequence, 14);
  double j_far = jaccard_exact(set.reference.sequence, set.reads[3].sequence, 14);
  EXPECT_DOUBLE_EQ(j_full, 1.0);
  EXPECT_GT(j_half, 0.2);
  EXPECT_LT(j_half, 0.45);
  EXPECT_LT(j_edge, 0.01);
  EXPECT_LT(j_far, 0.01);
}

TEST(PlantedReads, JaccardMonotoneInOffset) {
  std::string genome = gen_genome(2000, 13);
  std::vector<int64_t> offsets;
  for (int i = 0; i < 10; ++i) offsets.push_back(50 * i);
  PlantedReadSet set = gen_reads_with_overlaps(genome, 500, offsets, 0.0, 0, 14);
  double prev = 2.0;
  for (const Read& r : set.reads) {
    double j = jaccard_exact(set.reference.sequence, r.sequence, 14);
    EXPECT_LT(j, prev) << r.id;
    prev = j;
  }
}

TEST(PlantedReads, CalibrationReadsHaveNoOverlap) {
  std::string genome = gen_genome(1200, 17);
  PlantedReadSet set = gen_reads_with_overlaps(genome, 500, {0}, 0.0, 10, 18);
  ASSERT_EQ(set.reads.size(), 11u);
  for (size_t i = 1; i < set.reads.size(); ++i) {
    const Read& r = set.reads[i];
    EXPECT_EQ(r.id, "cal" + std::to_string(i - 1));
    EXPECT_TRUE(r.is_calibration);
    EXPECT_EQ(r.sequence.size(), 500u);
    EXPECT_LE(jaccard_exact(set.reference.sequence, r.sequence, 14), 0.05) << r.id;
  }
}

TEST(PlantedReads, NoiseSubstitutesAtTheRequestedRate) {
  std::string genome = gen_genome(2500, 19);
  PlantedReadSet set = gen_reads_with_overlaps(genome, 2000, {0}, 0.1, 0, 20);

  // reference stays clean; only target reads are noised
  EXPECT_EQ(set.reference.sequence, genome.substr(0, 2000));
  int64_t flips = 0;
  for (size_t i = 0; i < 2000; ++i) {
    char c = set.reads[0].sequence[i];
    ASSERT_NE(std::string("ACGT").find(c), std::string::npos);
    if (c != genome[i]) ++flips;
  }
  EXPECT_GE(flips, 150);  // Binomial(2000, 0.1) within ~3.7 sigma
  EXPECT_LE(flips, 250);

  PlantedReadSet again = gen_reads_with_overlaps(genome, 2000, {0}, 0.1, 0, 20);
  EXPECT_EQ(set.reads[0].sequence, again.reads[0].sequence);
  PlantedReadSet other = gen_reads_with_overlaps(genome, 2000, {0}, 0.1, 0, 21);
  EXPECT_NE(set.reads[0].sequence, other.reads[0].sequence);
}

TEST(PlantedReads, Validation) {
  std::string genome = gen_genome(1000, 23);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 0, {0}, 0.0, 0, 1), InvalidArgumentError);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 1001, {0}, 0.0, 0, 1), InvalidArgumentError);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 500, {0}, -0.1, 0, 1), InvalidArgumentError);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 500, {0}, 1.0, 0, 1), InvalidArgumentError);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 500, {0}, 0.0, -1, 1), InvalidArgumentError);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 500, {-1}, 0.0, 0, 1), InvalidArgumentError);
  EXPECT_THROW(gen_reads_with_overlaps(genome, 500, {501}, 0.0, 0, 1), InvalidArgumentError);
}

TEST(Layout, PlantedOffsetsAndZeroRegion) {
  LayoutParams params;
  params.n_reads = 20;
  params.k_top = 3;
  params.k_mid = 2;
  std::vector<int64_t> offsets = default_layout(params, 5000, 1000, 31);
  ASSERT_EQ(offsets.size(), 20u);
  EXPECT_EQ(offsets[0], 150);  // (1 - 0.85) * 1000
  EXPECT_EQ(offsets[1], 160);
  EXPECT_EQ(offsets[2], 170);
  EXPECT_EQ(offsets[3], 450);  // (1 - 0.55) * 1000
  EXPECT_EQ(offsets[4], 460);
  for (size_t i = 5; i < offsets.size(); ++i) {
    EXPECT_GE(offsets[i], 1000);  // past the reference: zero overlap
    EXPECT_LE(offsets[i], 4000);  // read still inside the genome
  }
  EXPECT_EQ(default_layout(params, 5000, 1000, 31), offsets);
}

TEST(Layout, ClampsOverlapAboveOneToOffsetZero) {
  LayoutParams params;
  params.n_reads = 1;
  params.k_top = 1;
  params.k_mid = 0;
  params.top_high = 1.2;
  std::vector<int64_t> offsets = default_layout(params, 3000, 1000, 33);
  ASSERT_EQ(offsets.size(), 1u);
  EXPECT_EQ(offsets[0], 0);
}

TEST(Layout, ComposesWithReadGenerator) {
  LayoutParams params;
  params.n_reads = 12;
  params.k_top = 3;
  params.k_mid = 2;
  std::string genome = gen_genome(5000, 35);
  std::vector<int64_t> offsets = default_layout(params, 5000, 1000, 36);
  PlantedReadSet set = gen_reads_with_overlaps(genome, 1000, offsets, 0.0, 4, 37);
  ASSERT_EQ(set.true_overlap.size(), 12u);
  EXPECT_DOUBLE_EQ(set.true_overlap[0], 1.0 - 150.0 / 1000.0);
  EXPECT_DOUBLE_EQ(set.true_overlap[3], 1.0 - 450.0 / 1000.0);
  for (size_t i = 5; i < 12; ++i) EXPECT_DOUBLE_EQ(set.true_overlap[i], 0.0);
  // planted ranking: top block strictly above mid block, mid above the rest
  EXPECT_GT(set.true_overlap[2], set.true_overlap[3]);
  EXPECT_GT(set.true_overlap[4], set.true_overlap[5]);
}

TEST(Layout, Validation) {
  LayoutParams params;
  params.n_reads = 4;
  params.k_top = 3;
  params.k_mid = 2;
  EXPECT_THROW(default_layout(params, 5000, 1000, 1), InvalidArgumentError);
  params.n_reads = 10;
  EXPECT_THROW(default_layout(params, 1999, 1000, 1), InvalidArgumentError);
}

}  // namespace
