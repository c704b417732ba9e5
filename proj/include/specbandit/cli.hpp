#pragma once

// Command-line wiring: six subcommands over the library. Curve commands
// write the CSV schema
//   algorithm,budget,trials,exact_error,exact_error_se,top2k_recall,mean_pulls,seed
// with the invoking flags echoed on a '#' comment line, so every file is
// reproducible from its own header. Exit codes: 0 success, 1 usage error,
// 2 data error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "specbandit/common.hpp"
#include "specbandit/eval.hpp"
#include "specbandit/minhash.hpp"
#include "specbandit/model.hpp"
#include "specbandit/spectral.hpp"
#include "specbandit/synthdata.hpp"

namespace specbandit::cli {

namespace detail {

inline std::vector<uint64_t> parse_budgets(const std::string& csv) {
  std::vector<uint64_t> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    double d = 0;
    try {
      size_t pos = 0;
      d = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgumentError("--budgets: cannot parse '" + tok + "'");
    }
    if (!(d >= 1.0) || d > 9e18)
      throw InvalidArgumentError("--budgets: budget out of range: '" + tok + "'");
    out.push_back(static_cast<uint64_t>(std::llround(d)));
  }
  if (out.empty()) throw InvalidArgumentError("--budgets: empty list");
  return out;
}

inline TopKMode parse_mode(const std::string& mode) {
  if (mode == "practical") return TopKMode::Practical;
  if (mode == "theory") return TopKMode::Theory;
  throw InvalidArgumentError("--mode: expected 'practical' or 'theory'");
}

inline VHatMethod parse_vhat(const std::string& vhat) {
  if (vhat == "split") return VHatMethod::SplitSvd;
  if (vhat == "colsum") return VHatMethod::ColumnSum;
  throw InvalidArgumentError("--vhat: expected 'split' or 'colsum'");
}

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline void write_points_file(const std::string& path, const std::vector<CurvePoint>& points,
                              const std::string& flags_comment) {
  std::ofstream f(path);
  if (!f) throw DataError(path + ": cannot open for writing");
  write_csv(f, points, flags_comment);
  if (!f) throw DataError(path + ": write failed");
}

inline std::string budgets_echo(const std::vector<uint64_t>& budgets) {
  std::string s;
  for (size_t i = 0; i < budgets.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(budgets[i]);
  }
  return s;
}

}  // namespace detail

inline int execute(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"rank-one response models, spectral estimation, and adaptive "
               "top-k / thresholding bandits"};
  app.set_config("--config", "", "read options from a key = value file");
  app.require_subcommand(0, 1);

  struct {
    int n = 1000, k = 5, trials = 100, threads = 0;
    uint64_t seed = 1;
    std::string budgets, mode = "practical", vhat = "colsum", out_path = "crowd_topk.csv";
    double m_max_factor = 10.0, c_lower = 0.05, scale = 1.0;
    bool no_reuse = false;
  } ct;
  CLI::App* sc_ct = app.add_subcommand("crowd-topk", "synthetic crowd top-k budget curves");
  sc_ct->add_option("--n", ct.n, "item count")->check(CLI::PositiveNumber);
  sc_ct->add_option("--k", ct.k, "ranking target")->check(CLI::PositiveNumber);
  sc_ct->add_option("--budgets", ct.budgets, "comma list of total budgets T")->required();
  sc_ct->add_option("--trials", ct.trials)->check(CLI::PositiveNumber);
  sc_ct->add_option("--seed", ct.seed);
  sc_ct->add_option("--mode", ct.mode, "practical|theory");
  sc_ct->add_option("--vhat", ct.vhat, "split|colsum");
  sc_ct->add_flag("--no-reuse", ct.no_reuse, "draw fresh columns every round");
  sc_ct->add_option("--m-max-factor", ct.m_max_factor,
                    "per-item measurement cap as a multiple of sqrt(T); <= 0 disables");
  sc_ct->add_option("--c-lower", ct.c_lower)->check(CLI::Range(1e-6, 1.0));
  sc_ct->add_option("--scale", ct.scale, "constant-scale multiplier on C4")
      ->check(CLI::PositiveNumber);
  sc_ct->add_option("--threads", ct.threads, "0 = hardware concurrency");
  sc_ct->add_option("--out", ct.out_path, "CSV output path");

  struct {
    int n = 200, trials = 100, threads = 0;
    uint64_t seed = 1;
    double alpha = 0.1, beta = 0.25, delta = 0.0, c_lower = 0.5, scale = 1e6;
    std::string out_path = "crowd_threshold.csv";
  } th;
  CLI::App* sc_th =
      app.add_subcommand("crowd-threshold", "synthetic crowd banded classification");
  sc_th->add_option("--n", th.n)->check(CLI::PositiveNumber);
  sc_th->add_option("--alpha", th.alpha)->check(CLI::Range(0.0, 1.0));
  sc_th->add_option("--beta", th.beta)->check(CLI::Range(0.0, 1.0));
  sc_th->add_option("--delta", th.delta, "per-round CI failure probability; 0 = 1/n^3");
  sc_th->add_option("--trials", th.trials)->check(CLI::PositiveNumber);
  sc_th->add_option("--seed", th.seed);
  sc_th->add_option("--c-lower", th.c_lower)->check(CLI::Range(1e-6, 1.0));
  sc_th->add_option("--scale", th.scale)->check(CLI::PositiveNumber);
  sc_th->add_option("--threads", th.threads);
  sc_th->add_option("--out", th.out_path);

  struct {
    std::string in_path, out_path = "reads.sketch";
    int k = 14, hashes = 1000;
    uint64_t seed = 1;
    bool canonical = false;
  } sk;
  CLI::App* sc_sk = app.add_subcommand("sketch", "FASTA -> binary min-hash sketches");
  sc_sk->add_option("--in", sk.in_path, "FASTA input")->required();
  sc_sk->add_option("--k", sk.k, "k-mer length")->check(CLI::Range(1, 31));
  sc_sk->add_option("--hashes", sk.hashes, "seed count")->check(CLI::PositiveNumber);
  sc_sk->add_option("--seed", sk.seed);
  sc_sk->add_flag("--canonical", sk.canonical, "fold reverse complements");
  sc_sk->add_option("--out", sk.out_path);

  struct {
    bool synthetic = false;
    std::string in_path, cal_prefix = "cal";
    int64_t genome = 20000, len = 1000, pool = 4096;
    int reads = 300, k_top = 5, kmer = 14, cal = 20, trials = 100, threads = 0;
    double noise = 0.0, m_max_factor = 10.0, c_lower = 0.05, scale = 1.0;
    uint64_t seed = 1;
    std::string budgets, mode = "practical", vhat = "colsum",
                out_path = "align_topk.csv";
  } al;
  CLI::App* sc_al =
      app.add_subcommand("align-topk", "read-overlap top-k curves from min-hash sampling");
  sc_al->add_flag("--synthetic", al.synthetic, "plant a synthetic genome/read set");
  sc_al->add_option("--in", al.in_path, "FASTA input (first record = reference)");
  sc_al->add_option("--cal-prefix", al.cal_prefix,
                    "read-id prefix marking calibration reads");
  sc_al->add_option("--genome", al.genome)->check(CLI::PositiveNumber);
  sc_al->add_option("--reads", al.reads)->check(CLI::PositiveNumber);
  sc_al->add_option("--len", al.len)->check(CLI::PositiveNumber);
  sc_al->add_option("--k-top", al.k_top, "ranking target")->check(CLI::PositiveNumber);
  sc_al->add_option("--kmer", al.kmer)->check(CLI::Range(1, 31));
  sc_al->add_option("--noise", al.noise)->check(CLI::Range(0.0, 0.999));
  sc_al->add_option("--cal", al.cal, "calibration read count")->check(CLI::NonNegativeNumber);
  sc_al->add_option("--pool", al.pool, "hash seed pool size")->check(CLI::PositiveNumber);
  sc_al->add_option("--budgets", al.budgets)->required();
  sc_al->add_option("--trials", al.trials)->check(CLI::PositiveNumber);
  sc_al->add_option("--seed", al.seed);
  sc_al->add_option("--mode", al.mode);
  sc_al->add_option("--vhat", al.vhat);
  sc_al->add_option("--m-max-factor", al.m_max_factor);
  sc_al->add_option("--c-lower", al.c_lower)->check(CLI::Range(1e-6, 1.0));
  sc_al->add_option("--scale", al.scale)->check(CLI::PositiveNumber);
  sc_al->add_option("--threads", al.threads);
  sc_al->add_option("--out", al.out_path);

  struct {
    std::string in_path, ref_id, cal_prefix = "cal", out_path = "estimate.csv";
    double c_lower = 0.05, scale = 1.0;
  } es;
  CLI::App* sc_es =
      app.add_subcommand("estimate", "one-shot split estimate from a sketch file");
  sc_es->add_option("--in", es.in_path, "sketch file from `sketch`")->required();
  sc_es->add_option("--ref", es.ref_id, "reference read id (default: first record)");
  sc_es->add_option("--cal-prefix", es.cal_prefix);
  sc_es->add_option("--c-lower", es.c_lower)->check(CLI::Range(1e-6, 1.0));
  sc_es->add_option("--scale", es.scale)->check(CLI::PositiveNumber);
  sc_es->add_option("--out", es.out_path);

  struct {
    std::string u_list;
    int n = 0, k = 5;
    uint64_t seed = 1;
  } ha;
  CLI::App* sc_ha = app.add_subcommand("hardness", "instance hardness report");
  sc_ha->add_option("--u", ha.u_list, "comma list of item values");
  sc_ha->add_option("--n", ha.n, "draw a synthetic crowd instance of this size instead");
  sc_ha->add_option("--k", ha.k)->check(CLI::PositiveNumber);
  sc_ha->add_option("--seed", ha.seed);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));

    if (sc_ct->parsed()) {
      CrowdTopKSpec spec;
      spec.n = ct.n;
      spec.k = ct.k;
      spec.mode = detail::parse_mode(ct.mode);
      spec.reuse_samples = !ct.no_reuse;
      spec.m_max_factor = ct.m_max_factor;
      spec.spectral.c_lower = ct.c_lower;
      spec.spectral.constant_scale = ct.scale;
      spec.spectral.v_hat_method = detail::parse_vhat(ct.vhat);
      std::vector<uint64_t> budgets = detail::parse_budgets(ct.budgets);
      int threads = detail::resolve_threads(ct.threads);
      std::vector<CurvePoint> points =
          run_experiment(spec, budgets, ct.trials, ct.seed, threads);
      std::ostringstream echo;
      echo << "crowd-topk --n " << ct.n << " --k " << ct.k << " --budgets "
           << detail::budgets_echo(budgets) << " --trials " << ct.trials << " --seed "
           << ct.seed << " --mode " << ct.mode << " --vhat " << ct.vhat
           << (ct.no_reuse ? " --no-reuse" : "") << " --m-max-factor " << ct.m_max_factor
           << " --c-lower " << ct.c_lower << " --scale " << ct.scale;
      detail::write_points_file(ct.out_path, points, echo.str());
      out << "crowd-topk: n=" << ct.n << " k=" << ct.k << " trials=" << ct.trials << " -> "
          << points.size() << " rows -> " << ct.out_path << "\n";
      return 0;
    }

    if (sc_th->parsed()) {
      CrowdThresholdSpec spec;
      spec.n = th.n;
      spec.alpha = th.alpha;
      spec.beta = th.beta;
      spec.delta = th.delta;
      spec.spectral.c_lower = th.c_lower;
      spec.spectral.constant_scale = th.scale;
      int threads = detail::resolve_threads(th.threads);
      std::vector<CurvePoint> points =
          run_experiment(spec, {}, th.trials, th.seed, threads);
      std::ostringstream echo;
      echo << "crowd-threshold --n " << th.n << " --alpha " << th.alpha << " --beta "
           << th.beta << " --delta " << th.delta << " --trials " << th.trials
           << " --seed " << th.seed << " --c-lower " << th.c_lower << " --scale "
           << th.scale;
      detail::write_points_file(th.out_path, points, echo.str());
      out << "crowd-threshold: n=" << th.n << " band=[" << th.alpha << "," << th.beta
          << "] trials=" << th.trials << " -> " << points.size() << " rows -> "
          << th.out_path << "\n";
      return 0;
    }

    if (sc_sk->parsed()) {
      std::vector<Read> reads = parse_fasta(sk.in_path);
      SketchSet set;
      set.k = sk.k;
      set.seeds.resize(static_cast<size_t>(sk.hashes));
      for (int j = 0; j < sk.hashes; ++j)
        set.seeds[static_cast<size_t>(j)] =
            derive(sk.seed, 0xa5edULL, static_cast<uint64_t>(j));
      for (const Read& r : reads) {
        ReadSketch s = sketch(r, sk.k, set.seeds, sk.canonical);
        set.ids.push_back(s.id);
        set.minima.push_back(std::move(s.minima));
      }
      save_sketches(sk.out_path, set);
      out << "sketch: " << reads.size() << " reads, k=" << sk.k << ", " << sk.hashes
          << " hashes -> " << sk.out_path << "\n";
      return 0;
    }

    if (sc_al->parsed()) {
      if (al.synthetic == !al.in_path.empty())
        throw InvalidArgumentError("align-topk: pass exactly one of --synthetic or --in");
      std::vector<uint64_t> budgets = detail::parse_budgets(al.budgets);
      int threads = detail::resolve_threads(al.threads);
      AlignRunParams params;
      params.k = al.k_top;
      params.mode = detail::parse_mode(al.mode);
      params.m_max_factor = al.m_max_factor;
      params.spectral.c_lower = al.c_lower;
      params.spectral.constant_scale = al.scale;
      params.spectral.v_hat_method = detail::parse_vhat(al.vhat);

      std::vector<RowResult> rows;
      if (al.synthetic) {
        AlignTopKSpec spec;
        spec.genome_length = al.genome;
        spec.read_length = al.len;
        spec.layout.n_reads = al.reads;
        spec.layout.k_top = al.k_top;
        spec.noise_rate = al.noise;
        spec.n_calibration = al.cal;
        spec.k = al.k_top;
        spec.kmer_k = al.kmer;
        spec.pool_size = al.pool;
        spec.mode = params.mode;
        spec.m_max_factor = al.m_max_factor;
        spec.spectral = params.spectral;
        rows = run_align_topk_rows(spec, budgets, al.trials, al.seed, threads);
      } else {
        std::vector<Read> records = parse_fasta(al.in_path);
        if (records.size() < 3)
          throw DataError(al.in_path + ": need a reference and at least 2 reads");
        Read reference = records.front();
        std::vector<Read> reads(records.begin() + 1, records.end());
        for (Read& r : reads)
          r.is_calibration = r.id.rfind(al.cal_prefix, 0) == 0;
        auto pool = std::make_shared<const MinHashPool>(
            reference, reads, al.kmer, al.pool, derive(al.seed, 0x94ULL), false);
        // Ground truth for real input: exact k-mer Jaccard against the
        // reference (what min-hash sampling estimates in the limit).
        const std::vector<Read>& targets = pool->targets();
        Eigen::VectorXd truth_scores(static_cast<Eigen::Index>(targets.size()));
        for (size_t i = 0; i < targets.size(); ++i)
          truth_scores(static_cast<Eigen::Index>(i)) =
              jaccard_exact(reference.sequence, targets[i].sequence, al.kmer);
        std::vector<int> truth = top_k_indices(truth_scores, al.k_top);
        rows = run_align_rows_with_pool(pool, truth, params, budgets, al.trials, al.seed,
                                        threads);
      }
      std::vector<CurvePoint> points;
      points.reserve(rows.size());
      for (RowResult& r : rows) points.push_back(std::move(r.point));
      std::ostringstream echo;
      echo << "align-topk " << (al.synthetic ? "--synthetic" : "--in " + al.in_path)
           << " --genome " << al.genome << " --reads " << al.reads << " --len " << al.len
           << " --k-top " << al.k_top << " --kmer " << al.kmer << " --noise " << al.noise
           << " --cal " << al.cal << " --pool " << al.pool << " --budgets "
           << detail::budgets_echo(budgets) << " --trials " << al.trials << " --seed "
           << al.seed << " --mode " << al.mode << " --vhat " << al.vhat
           << " --m-max-factor " << al.m_max_factor << " --c-lower " << al.c_lower
           << " --scale " << al.scale;
      detail::write_points_file(al.out_path, points, echo.str());
      out << "align-topk: k=" << al.k_top << " trials=" << al.trials << " -> "
          << points.size() << " rows -> " << al.out_path << "\n";
      return 0;
    }

    if (sc_es->parsed()) {
      SketchSet set = load_sketches(es.in_path);
      if (set.ids.size() < 3)
        throw DataError(es.in_path + ": need a reference and at least 2 reads");
      size_t ref_idx = 0;
      if (!es.ref_id.empty()) {
        auto it = std::find(set.ids.begin(), set.ids.end(), es.ref_id);
        if (it == set.ids.end())
          throw DataError(es.in_path + ": reference id '" + es.ref_id + "' not found");
        ref_idx = static_cast<size_t>(it - set.ids.begin());
      }
      std::vector<size_t> rows;  // non-reference rows, file order
      std::vector<int> cal_rows;
      for (size_t i = 0; i < set.ids.size(); ++i) {
        if (i == ref_idx) continue;
        if (set.ids[i].rfind(es.cal_prefix, 0) == 0)
          cal_rows.push_back(static_cast<int>(rows.size()));
        rows.push_back(i);
      }
      CollisionMatrix cm;
      cm.reference_id = set.ids[ref_idx];
      cm.y.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(set.seeds.size()));
      for (size_t r = 0; r < rows.size(); ++r)
        for (size_t j = 0; j < set.seeds.size(); ++j)
          cm.y(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
              set.minima[rows[r]][j] == set.minima[ref_idx][j] ? 1.0 : 0.0;
      Eigen::MatrixXd x = (1.0 - cm.y.array()).matrix();

      SpectralConfig cfg;
      cfg.c_lower = es.c_lower;
      cfg.constant_scale = es.scale;
      std::optional<double> v_norm;
      std::optional<Eigen::VectorXd> v_ref;
      if (!cal_rows.empty()) {
        Eigen::VectorXd v = calibrate_v(cm, cal_rows);
        v_norm = v.norm();
        v_ref = std::move(v);
      }
      SpectralEstimate est =
          estimate(x, v_norm, cfg, v_ref ? &*v_ref : nullptr);

      std::ofstream f(es.out_path);
      if (!f) throw DataError(es.out_path + ": cannot open for writing");
      f << "# estimate --in " << es.in_path << " --ref " << cm.reference_id
        << " --cal-prefix " << es.cal_prefix << " --c-lower " << es.c_lower
        << " --scale " << es.scale << "\n";
      f << "id,u_hat,ci_half_width,overlap_score\n" << std::setprecision(17);
      for (size_t r = 0; r < rows.size(); ++r) {
        f << set.ids[rows[r]] << ',' << est.u_hat(static_cast<Eigen::Index>(r)) << ',';
        if (est.ci_half_width) f << *est.ci_half_width;
        else f << "nan";
        f << ',' << 1.0 - est.u_hat(static_cast<Eigen::Index>(r)) << "\n";
      }
      if (!f) throw DataError(es.out_path + ": write failed");
      out << "estimate: ref=" << cm.reference_id << " rows=" << rows.size()
          << " cal=" << cal_rows.size() << " -> " << es.out_path << "\n";
      return 0;
    }

    if (sc_ha->parsed()) {
      Eigen::VectorXd u;
      if (!ha.u_list.empty()) {
        std::vector<double> vals;
        std::stringstream ss(ha.u_list);
        std::string tok;
        while (std::getline(ss, tok, ','))
          if (!tok.empty()) vals.push_back(std::stod(tok));
        u = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
      } else if (ha.n > 0) {
        u = gen_crowd_instance(ha.n, ha.seed).u_vec();
      } else {
        throw InvalidArgumentError("hardness: pass --u or --n");
      }
      InstanceHardness h = instance_hardness(u, ha.k);
      out << "hardness: n=" << u.size() << " k=" << ha.k << " H2=" << h.h2
          << " delta_k+1=" << h.delta_kplus1 << "\n";
      return 0;
    }

    err << app.help();
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgumentError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace specbandit::cli
