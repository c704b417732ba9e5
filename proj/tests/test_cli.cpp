#include "specbandit/cli.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "specbandit/minhash.hpp"
#include "specbandit/synthdata.hpp"
#include "test_util.hpp"

using namespace specbandit;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::execute(std::move(args), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::string planted_fasta(const testutil::TempDir& dir, const std::string& name) {
  std::string genome = gen_genome(3000, 808);
  PlantedReadSet set =
      gen_reads_with_overlaps(genome, 400, {0, 100, 200, 1500}, 0.0, 2, 809);
  std::vector<Read> all = {set.reference};
  all.insert(all.end(), set.reads.begin(), set.reads.end());
  std::string path = dir.file(name).string();
  write_fasta(path, all);
  return path;
}

TEST(Cli, CrowdTopkWritesCurveCsv) {
  testutil::TempDir dir;
  std::string csv = dir.file("curve.csv").string();
  CliRun r = run_cli({"crowd-topk", "--n", "30", "--k", "3", "--budgets", "2000,4000",
                      "--trials", "4", "--seed", "9", "--threads", "1", "--out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("crowd-topk:"), std::string::npos);
  EXPECT_NE(r.out.find("4 rows"), std::string::npos);

  std::vector<std::string> lines = testutil::split_lines(testutil::read_text(csv));
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(lines[0].rfind("# crowd-topk --n 30 --k 3 --budgets 2000,4000", 0), 0u);
  EXPECT_EQ(lines[1],
            "algorithm,budget,trials,exact_error,exact_error_se,top2k_recall,mean_pulls,seed");
  const std::vector<std::string> want_algo = {"adaptive", "nonadaptive", "adaptive",
                                              "nonadaptive"};
  const std::vector<std::string> want_budget = {"2000", "2000", "4000", "4000"};
  for (size_t i = 0; i < 4; ++i) {
    std::vector<std::string> cells = split_csv(lines[2 + i]);
    ASSERT_EQ(cells.size(), 8u);
    EXPECT_EQ(cells[0], want_algo[i]);
    EXPECT_EQ(cells[1], want_budget[i]);
    EXPECT_EQ(cells[2], "4");
    EXPECT_LE(std::stod(cells[6]), std::stod(cells[1]));  // mean_pulls <= budget
    EXPECT_EQ(cells[7], "9");
  }
}

TEST(Cli, SketchOutputIsByteDeterministic) {
  testutil::TempDir dir;
  std::string fasta = planted_fasta(dir, "reads.fa");
  std::string s1 = dir.file("a.sketch").string();
  std::string s2 = dir.file("b.sketch").string();
  std::string s3 = dir.file("c.sketch").string();

  ASSERT_EQ(run_cli({"sketch", "--in", fasta, "--k", "12", "--hashes", "300", "--seed",
                     "5", "--out", s1}).code, 0);
  ASSERT_EQ(run_cli({"sketch", "--in", fasta, "--k", "12", "--hashes", "300", "--seed",
                     "5", "--out", s2}).code, 0);
  ASSERT_EQ(run_cli({"sketch", "--in", fasta, "--k", "12", "--hashes", "300", "--seed",
                     "6", "--out", s3}).code, 0);
  EXPECT_EQ(testutil::read_text(s1), testutil::read_text(s2));
  EXPECT_NE(testutil::read_text(s1), testutil::read_text(s3));

  SketchSet set = load_sketches(s1);
  EXPECT_EQ(set.k, 12);
  EXPECT_EQ(set.seeds.size(), 300u);
  ASSERT_EQ(set.ids.size(), 7u);  // ref + 4 targets + 2 calibration
  EXPECT_EQ(set.ids[0], "ref");
  EXPECT_EQ(set.ids[1], "read0");
  EXPECT_EQ(set.ids[5], "cal0");
}

TEST(Cli, AlignTopkSynthetic) {
  testutil::TempDir dir;
  std::string csv = dir.file("align.csv").string();
  CliRun r = run_cli({"align-topk", "--synthetic", "--genome", "4000", "--reads", "12",
                      "--len", "500", "--k-top", "3", "--kmer", "12", "--cal", "8",
                      "--pool", "1024", "--budgets", "6000", "--trials", "3", "--seed",
                      "4", "--threads", "1", "--out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> lines = testutil::split_lines(testutil::read_text(csv));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].rfind("# align-topk --synthetic", 0), 0u);
  std::vector<std::string> a = split_csv(lines[2]);
  std::vector<std::string> b = split_csv(lines[3]);
  EXPECT_EQ(a[0], "adaptive");
  EXPECT_EQ(b[0], "nonadaptive");
  EXPECT_LE(std::stod(a[6]), 6000.0);
  EXPECT_LE(std::stod(b[6]), 6000.0);
}

TEST(Cli, AlignTopkFromFasta) {
  testutil::TempDir dir;
  std::string fasta = planted_fasta(dir, "reads.fa");
  std::string csv = dir.file("align.csv").string();
  CliRun r = run_cli({"align-topk", "--in", fasta, "--k-top", "2", "--kmer", "8",
                      "--pool", "512", "--budgets", "2000", "--trials", "2", "--seed",
                      "3", "--threads", "1", "--out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> lines = testutil::split_lines(testutil::read_text(csv));
  ASSERT_EQ(lines.size(), 4u);
  for (size_t i = 2; i < 4; ++i) {
    std::vector<std::string> cells = split_csv(lines[i]);
    EXPECT_EQ(cells[2], "2");
    EXPECT_LE(std::stod(cells[6]), 2000.0);
  }
}

TEST(Cli, EstimateFromSketchFile) {
  testutil::TempDir dir;
  std::string fasta = planted_fasta(dir, "reads.fa");
  std::string sk = dir.file("reads.sketch").string();
  std::string csv = dir.file("est.csv").string();
  ASSERT_EQ(run_cli({"sketch", "--in", fasta, "--k", "12", "--hashes", "600", "--seed",
                     "5", "--out", sk}).code, 0);
  CliRun r = run_cli({"estimate", "--in", sk, "--out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ref=ref"), std::string::npos);
  EXPECT_NE(r.out.find("cal=2"), std::string::npos);

  std::vector<std::string> lines = testutil::split_lines(testutil::read_text(csv));
  ASSERT_EQ(lines.size(), 8u);  // comment + header + 6 non-reference rows
  EXPECT_EQ(lines[1], "id,u_hat,ci_half_width,overlap_score");
  double overlap_read0 = -1, overlap_cal0 = -1, ci = -1;
  for (size_t i = 2; i < lines.size(); ++i) {
    std::vector<std::string> cells = split_csv(lines[i]);
    ASSERT_EQ(cells.size(), 4u);
    if (cells[0] == "read0") {
      overlap_read0 = std::stod(cells[3]);
      ci = std::stod(cells[2]);
    }
    if (cells[0] == "cal0") overlap_cal0 = std::stod(cells[3]);
  }
  // read0 is a copy of the reference; cal0 is a random string
  EXPECT_GT(overlap_read0, 0.9);
  EXPECT_LT(overlap_cal0, 0.2);
  EXPECT_GT(ci, 0.0);  // calibration present, so a width is reported

  // reference override changes the row set
  std::string csv2 = dir.file("est2.csv").string();
  CliRun r2 = run_cli({"estimate", "--in", sk, "--ref", "read0", "--out", csv2});
  ASSERT_EQ(r2.code, 0) << r2.err;
  EXPECT_NE(r2.out.find("ref=read0"), std::string::npos);
  std::vector<std::string> lines2 = testutil::split_lines(testutil::read_text(csv2));
  EXPECT_EQ(split_csv(lines2[2])[0], "ref");

  EXPECT_EQ(run_cli({"estimate", "--in", sk, "--ref", "nosuch"}).code, 2);
}

TEST(Cli, HardnessReport) {
  CliRun r = run_cli({"hardness", "--u", "0.9,0.8,0.5,0.4", "--k", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("n=4 k=2"), std::string::npos);
  EXPECT_NE(r.out.find("H2=33.333"), std::string::npos);
  EXPECT_NE(r.out.find("delta_k+1=0.3"), std::string::npos);

  CliRun synth = run_cli({"hardness", "--n", "50", "--k", "3", "--seed", "2"});
  EXPECT_EQ(synth.code, 0);

  CliRun neither = run_cli({"hardness"});
  EXPECT_EQ(neither.code, 1);
  EXPECT_NE(neither.err.find("usage error"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"crowd-topk"}).code, 1);  // missing --budgets
  EXPECT_EQ(run_cli({"crowd-topk", "--budgets", "100", "--bogus"}).code, 1);
  EXPECT_EQ(run_cli({"no-such-command"}).code, 1);

  CliRun bad_budget = run_cli({"crowd-topk", "--budgets", "abc"});
  EXPECT_EQ(bad_budget.code, 1);
  EXPECT_NE(bad_budget.err.find("--budgets"), std::string::npos);
  EXPECT_EQ(run_cli({"crowd-topk", "--budgets", "0"}).code, 1);
  EXPECT_EQ(run_cli({"crowd-topk", "--budgets", "100", "--mode", "junk"}).code, 1);

  EXPECT_EQ(run_cli({"align-topk", "--budgets", "100"}).code, 1);  // neither source
  EXPECT_EQ(run_cli({"align-topk", "--synthetic", "--in", "x.fa", "--budgets", "100"}).code,
            1);
}

TEST(Cli, DataErrorsExitTwo) {
  testutil::TempDir dir;
  CliRun missing = run_cli({"sketch", "--in", dir.file("nope.fa").string()});
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("cannot open"), std::string::npos);

  std::string bad = dir.file("bad.fa").string();
  testutil::write_text(bad, ">r1\nACGT\nAC!T\n");
  CliRun invalid = run_cli({"sketch", "--in", bad});
  EXPECT_EQ(invalid.code, 2);
  EXPECT_NE(invalid.err.find(":3: invalid character"), std::string::npos);

  std::string junk = dir.file("junk.sketch").string();
  testutil::write_text(junk, "this is not a sketch file");
  EXPECT_EQ(run_cli({"estimate", "--in", junk}).code, 2);

  // a sketch of a 2-record FASTA has too few rows to estimate from
  std::string tiny = dir.file("tiny.fa").string();
  testutil::write_text(tiny, ">a\nACGTACGTACGT\n>b\nTTGCATTGCATT\n");
  std::string tiny_sk = dir.file("tiny.sketch").string();
  ASSERT_EQ(run_cli({"sketch", "--in", tiny, "--k", "4", "--hashes", "16", "--out",
                     tiny_sk}).code, 0);
  EXPECT_EQ(run_cli({"estimate", "--in", tiny_sk}).code, 2);
}

TEST(Cli, HelpExitsZero) {
  CliRun top = run_cli({"--help"});
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("crowd-topk"), std::string::npos);
  EXPECT_EQ(run_cli({"crowd-topk", "--help"}).code, 0);
}

TEST(Cli, ConfigFileSuppliesOptions) {
  testutil::TempDir dir;
  std::string csv = dir.file("cfg_curve.csv").string();
  std::string cfg = dir.file("run.cfg").string();
  testutil::write_text(cfg,
                       "[crowd-topk]\n"
                       "n = 25\n"
                       "k = 2\n"
                       "budgets = 1500\n"
                       "trials = 2\n"
                       "threads = 1\n"
                       "out = " + csv + "\n");
  CliRun r = run_cli({"--config", cfg, "crowd-topk"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::vector<std::string> lines = testutil::split_lines(testutil::read_text(csv));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0].rfind("# crowd-topk --n 25 --k 2 --budgets 1500 --trials 2", 0), 0u);
  for (size_t i = 2; i < 4; ++i) EXPECT_EQ(split_csv(lines[i])[2], "2");
}

}  // namespace
