#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "realcl/config.hpp"
#include "realcl/gradcheck.hpp"
#include "realcl/manifest.hpp"
#include "realcl/model.hpp"
#include "realcl/synth.hpp"
#include "realcl/trainer.hpp"

namespace realcl::cli {

namespace detail {

inline RunConfig load_run_config(const std::string& path,
                                 const std::vector<std::string>& overrides) {
  RunConfig cfg = load_config(path, overrides);
  if (const char* env = std::getenv("REALCL_SEED")) {
    try {
      cfg.train.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("REALCL_SEED is not a valid integer: " +
                        std::string(env));
    }
  }
  return cfg;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open output file: " + path);
  out << text;
}

inline int run_synth(const std::string& config_path, std::string out,
                     const std::vector<std::string>& overrides) {
  const RunConfig cfg = load_run_config(config_path, overrides);
  if (out.empty()) out = cfg.out_manifest;
  const Manifest m = generate_world(cfg.world);
  save_manifest(m, out);
  std::cout << "wrote " << m.records.size() << " records to " << out << "\n";
  return 0;
}

inline int run_train(const std::string& config_path, std::string out,
                     const std::string& manifest_path,
                     const std::vector<std::string>& overrides) {
  const RunConfig cfg = load_run_config(config_path, overrides);
  if (out.empty()) out = cfg.out_checkpoint;
  const Manifest manifest = manifest_path.empty()
                                ? generate_world(cfg.world)
                                : load_manifest(manifest_path);
  TrainResult stage1 = train_stage1(cfg.train, manifest);
  for (std::size_t e = 0; e < stage1.log.epochs.size(); ++e) {
    const auto& ep = stage1.log.epochs[e];
    std::cerr << "stage1 epoch " << e << ": loss " << format_real(ep.mean_loss)
              << ", hard sets " << ep.hard_real_size << "r/"
              << ep.hard_fake_size << "f, fused " << ep.fused_pos_total
              << "p/" << ep.fused_neg_total << "n\n";
  }
  const TrainLog stage2 = train_stage2(stage1.params, cfg.train, manifest);
  for (std::size_t e = 0; e < stage2.epochs.size(); ++e) {
    std::cerr << "stage2 epoch " << e << ": loss "
              << format_real(stage2.epochs[e].mean_loss) << "\n";
  }
  save_checkpoint(stage1.params, out,
                  train_summary_json(cfg.train, stage1.log.final_loss()));
  std::cout << "stage1 final loss " << format_real(stage1.log.final_loss())
            << ", stage2 final loss " << format_real(stage2.final_loss())
            << ", checkpoint " << out << "\n";
  return 0;
}

inline int run_eval(const std::string& ckpt_path,
                    const std::string& manifest_path,
                    const std::string& compression, const std::string& out,
                    std::uint64_t seed) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const Manifest manifest = load_manifest(manifest_path);
  const auto level =
      CompressionLevel::from_label(compression_from_string(compression));
  const Metrics m = evaluate_model(ck.params, manifest, level, seed);

  ResultRow row;
  row.cell_id = "eval";
  if (!ck.meta.is_null()) {
    row.strategy = ck.meta.value("strategy", "");
    row.fusion_mode = ck.meta.value("fusion_mode", "");
    row.fused_negative_mode = ck.meta.value("fused_negative_mode", "");
    row.positive_budget = ck.meta.value("positive_budget", 0);
    row.neg_count = ck.meta.value("neg_count", 0);
    row.stage1_final_loss = ck.meta.value("stage1_final_loss", 0.0);
  }
  row.compression = to_string(level.label);
  row.seed = seed;
  row.metrics = m;
  write_text_file(out, results_csv_header() + result_row_csv(row));
  std::cout << "tpr " << format_real(m.tpr) << " fpr " << format_real(m.fpr)
            << " auc " << format_real(m.auc) << " acc " << format_real(m.acc)
            << " (" << m.n_eval << " samples, " << to_string(m.perturbation)
            << ")\n";
  return 0;
}

inline int run_ablate(const std::string& config_path,
                      const std::vector<std::string>& axes, int seeds,
                      std::string out,
                      const std::vector<std::string>& overrides) {
  const RunConfig cfg = load_run_config(config_path, overrides);
  if (out.empty()) out = cfg.out_results;
  const AblationOutcome outcome =
      run_ablation(cfg.world, cfg.train, cfg.test_seed, axes, seeds);
  write_text_file(out, results_to_csv(outcome.rows));
  for (const auto& f : outcome.failures) {
    std::cerr << "cell failed: " << f << "\n";
  }
  std::cout << "wrote " << outcome.rows.size() << " rows to " << out << " ("
            << outcome.failures.size() << " cell failures)\n";
  return 0;
}

inline int run_gradcheck(const std::string& config_path,
                         const std::vector<std::string>& overrides) {
  const RunConfig cfg = load_run_config(config_path, overrides);
  const GradCheckSuiteReport report = run_gradcheck_suite(cfg.train.loss);
  for (const auto& line : report.lines) std::cout << line << "\n";
  if (!report.pass) {
    std::cerr << "gradcheck failed (max rel err "
              << format_real(report.max_rel_err) << ")\n";
    return 2;
  }
  return 0;
}

inline int run_pairs(const std::string& manifest_path,
                     const std::string& strategy_name, int limit) {
  const Manifest m = load_manifest(manifest_path);
  const PairingStrategy strategy = strategy_from_string(strategy_name);
  int printed = 0;
  const int n = static_cast<int>(m.records.size());
  for (int i = 0; i < n && printed < limit; ++i) {
    for (int j = i; j < n && printed < limit; ++j) {
      if (pair_admissible(m.records[i], m.records[j], strategy)) {
        std::cout << m.records[i].sample_id << "\t" << m.records[j].sample_id
                  << "\n";
        ++printed;
      }
    }
  }
  return 0;
}

inline int run_beta_test(long samples) {
  if (samples < 1000) throw ConfigError("beta-test: need >= 1000 samples");
  struct Case {
    double alpha, beta, mean_tol, var_tol;
  };
  bool all_pass = true;
  for (const Case c : {Case{0.8, 0.8, 0.01, 0.005}, Case{1.0, 1.0, 0.01, 0.005},
                       Case{2.0, 5.0, 0.01, 0.005}}) {
    SeededRng rng(99);
    double sum = 0.0, sq = 0.0;
    for (long i = 0; i < samples; ++i) {
      const double x = beta_sample(rng, c.alpha, c.beta);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / samples;
    const double var = sq / samples - mean * mean;
    const double want_mean = c.alpha / (c.alpha + c.beta);
    const double ab = c.alpha + c.beta;
    const double want_var = c.alpha * c.beta / (ab * ab * (ab + 1.0));
    const bool pass = std::abs(mean - want_mean) < c.mean_tol &&
                      std::abs(var - want_var) < c.var_tol;
    all_pass = all_pass && pass;
    std::cout << "beta(" << c.alpha << ", " << c.beta << "): mean " << mean
              << " (want " << want_mean << "), var " << var << " (want "
              << want_var << ") " << (pass ? "PASS" : "FAIL") << "\n";
  }
  // Beta(1,1) must be uniform: Kolmogorov-Smirnov against U(0,1).
  {
    SeededRng rng(99);
    std::vector<double> xs(samples);
    for (auto& x : xs) x = beta_sample(rng, 1.0, 1.0);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (long i = 0; i < samples; ++i) {
      const double lo = static_cast<double>(i) / samples;
      const double hi = static_cast<double>(i + 1) / samples;
      d = std::max({d, std::abs(xs[i] - lo), std::abs(xs[i] - hi)});
    }
    const bool pass = d < 0.02;
    all_pass = all_pass && pass;
    std::cout << "beta(1, 1) KS vs uniform: D " << d << " "
              << (pass ? "PASS" : "FAIL") << "\n";
  }
  return all_pass ? 0 : 2;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. Returns the process
/// exit code: 0 success, 1 validation error, 2 numerical failure.
inline int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"real-centric contrastive learning engine"};
  app.require_subcommand(1);

  std::string config_path, out, manifest_path, ckpt_path;
  std::string compression = "none", strategy = "semantical";
  std::vector<std::string> overrides, axes;
  int limit = 20, seeds = 3;
  long samples = 100000;
  std::uint64_t eval_seed = 0;

  auto* synth = app.add_subcommand("synth", "generate a synthetic manifest");
  synth->add_option("--config", config_path, "run config file")->required();
  synth->add_option("--out", out, "output manifest path");
  synth->add_option("--set", overrides, "override config key (key.path=value)");

  auto* train = app.add_subcommand("train", "two-stage training");
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--out", out, "output checkpoint path");
  train->add_option("--manifest", manifest_path,
                    "training manifest (defaults to generating the world)");
  train->add_option("--set", overrides, "override config key (key.path=value)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  eval->add_option("--manifest", manifest_path, "evaluation manifest")
      ->required();
  eval->add_option("--compression", compression, "none|light|heavy")
      ->required();
  eval->add_option("--out", out, "results csv path")->required();
  eval->add_option("--seed", eval_seed, "compression noise seed");

  auto* ablate = app.add_subcommand("ablate", "run an ablation sweep");
  ablate->add_option("--config", config_path, "run config file")->required();
  ablate->add_option("--axes", axes, "axes: strategy,fusion,counts,negmode")
      ->required()
      ->delimiter(',');
  ablate->add_option("--seeds", seeds, "seeds per cell");
  ablate->add_option("--out", out, "results csv path");
  ablate->add_option("--set", overrides,
                     "override config key (key.path=value)");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of every loss gradient");
  gradcheck->add_option("--config", config_path, "run config file")->required();
  gradcheck->add_option("--set", overrides,
                        "override config key (key.path=value)");

  auto* pairs =
      app.add_subcommand("pairs", "print admissible positive pairs");
  pairs->add_option("--manifest", manifest_path, "manifest path")->required();
  pairs->add_option("--strategy", strategy,
                    "instance|temporal|semantical|class");
  pairs->add_option("--limit", limit, "max pairs to print");

  auto* beta = app.add_subcommand("beta-test", "sampler moment tests");
  beta->add_option("--samples", samples, "draws per test");

  std::vector<const char*> argv;
  argv.push_back("realcl");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return detail::run_synth(config_path, out, overrides);
    if (train->parsed()) {
      return detail::run_train(config_path, out, manifest_path, overrides);
    }
    if (eval->parsed()) {
      return detail::run_eval(ckpt_path, manifest_path, compression, out,
                              eval_seed);
    }
    if (ablate->parsed()) {
      return detail::run_ablate(config_path, axes, seeds, out, overrides);
    }
    if (gradcheck->parsed()) {
      return detail::run_gradcheck(config_path, overrides);
    }
    if (pairs->parsed()) return detail::run_pairs(manifest_path, strategy, limit);
    if (beta->parsed()) return detail::run_beta_test(samples);
  } catch (const NonFiniteLoss& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateNorm& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace realcl::cli
