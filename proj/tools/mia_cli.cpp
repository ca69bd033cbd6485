// Copyright 2026 The mia-causal-eval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mia/attacks.hpp"
#include "mia/propensity.hpp"
#include "mia/protocols.hpp"
#include "mia/rng.hpp"
#include "mia/scenario.hpp"
#include "mia/stability.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string scenario;
  std::string output_dir;
  std::string propensity;
  long long reps = -1;
  long long seed = -1;
  bool svg = false;
};

mia::RunConfig build_config(const CommonFlags& flags) {
  mia::RunConfig cfg;
  if (!flags.config.empty()) {
    cfg = mia::load_config(flags.config);
  } else {
    cfg = mia::default_config(flags.scenario == "dpsgd"
                                  ? mia::Scenario::kDpSgdSynthetic
                                  : mia::Scenario::kRidgeSynthetic);
  }
  // flags override config-file keys
  if (!flags.scenario.empty() && flags.config.empty()) {
    // already applied through default_config above
  } else if (!flags.scenario.empty()) {
    const mia::RunConfig base =
        mia::default_config(flags.scenario == "dpsgd"
                                ? mia::Scenario::kDpSgdSynthetic
                                : mia::Scenario::kRidgeSynthetic);
    cfg.scenario = base.scenario;
    cfg.dim = base.dim;
    cfg.trainer = base.trainer;
  }
  if (!flags.propensity.empty()) {
    if (flags.propensity == "oracle") {
      cfg.regimes = {mia::RegimeCell::kZeroRunRaw,
                     mia::RegimeCell::kZeroRunOracle};
    } else if (flags.propensity == "logistic") {
      cfg.regimes = {mia::RegimeCell::kZeroRunRaw,
                     mia::RegimeCell::kZeroRunLearned};
    } else if (flags.propensity.rfind("constant:", 0) == 0) {
      // constant propensity corresponds to the uncorrected cells
      cfg.regimes = {mia::RegimeCell::kZeroRunRaw};
    } else {
      throw CLI::ValidationError("--propensity",
                                 "expected oracle|logistic|constant:<p>");
    }
  }
  if (flags.reps >= 0) cfg.repetitions = static_cast<std::size_t>(flags.reps);
  if (flags.seed >= 0) cfg.master_seed = static_cast<std::uint64_t>(flags.seed);
  if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
  if (flags.svg) cfg.write_svg = true;
  return cfg;
}

int run_simulate(const CommonFlags& flags) {
  const mia::RunConfig cfg = build_config(flags);
  std::filesystem::create_directories(cfg.output_dir);
  mia::ProblemSpec spec =
      mia::make_problem(mia::mix_seed(cfg.master_seed, 0x9b1ecULL), cfg.dim,
                        cfg.corr, cfg.teacher_scale);
  spec.label_noise_sd = cfg.label_noise_sd;
  const mia::AttackSpec attack{mia::AttackKind::kLossBased,
                               mia::ScoreOrientation::kRawLoss};
  const mia::Dataset members =
      mia::sample_members(spec, cfg.n_zerorun, mia::mix_seed(cfg.master_seed, 1));
  const mia::Dataset nonmembers = mia::sample_shifted(
      spec, cfg.n_zerorun, mia::mix_seed(cfg.master_seed, 2));
  mia::ModelParams model;
  if (cfg.trainer.variant == mia::TrainerVariant::kRidgeClosedForm) {
    model = mia::train_ridge(members, cfg.trainer.ridge_lambda);
  } else {
    model = mia::train_dpsgd(members, cfg.trainer,
                             mia::mix_seed(cfg.master_seed, 3));
  }
  const mia::EvidenceSet ev =
      mia::run_zerorun(model, members, nonmembers, attack);
  const auto dir = std::filesystem::path(cfg.output_dir);
  mia::write_evidence_csv(ev, (dir / "evidence.csv").string());
  mia::write_evidence_json(ev, (dir / "evidence.json").string());
  std::cout << "wrote " << (dir / "evidence.csv").string() << " and "
            << (dir / "evidence.json").string() << "\n";
  return 0;
}

int run_evaluate(const CommonFlags& flags) {
  const mia::RunConfig cfg = build_config(flags);
  const mia::ReportBundle bundle = mia::run_scenario(cfg);
  for (const auto& cell : bundle.cells) {
    std::printf("%-28s %s auc=%.4f ate=%.4f youden=%.4f\n",
                cell.label.c_str(), cell.ok ? "ok  " : "FAIL", cell.mean.auc,
                cell.mean.ate, cell.mean.youden_sup);
    if (!cell.ok) std::printf("  error: %s\n", cell.error.c_str());
  }
  std::cout << "bundle: " << bundle.output_dir << "\n";
  return bundle.all_ok ? 0 : 1;
}

int run_roc(const std::string& bundle_dir, bool with_dp_bound) {
  const auto missing = mia::render_roc(bundle_dir, with_dp_bound);
  for (const auto& m : missing) {
    std::cerr << "missing curve file: " << m << "\n";
  }
  std::cout << "wrote "
            << (std::filesystem::path(bundle_dir) / "roc.svg").string()
            << "\n";
  return 0;
}

int run_stability(const CommonFlags& flags, std::size_t n_train,
                  std::size_t n_perturb, std::size_t n_test) {
  const mia::RunConfig cfg = build_config(flags);
  mia::ProblemSpec spec =
      mia::make_problem(mia::mix_seed(cfg.master_seed, 0x9b1ecULL), cfg.dim,
                        cfg.corr, cfg.teacher_scale);
  spec.label_noise_sd = cfg.label_noise_sd;
  mia::StabilityConfig scfg;
  scfg.randomized = mia::trainer_is_randomized(cfg.trainer);
  const mia::TrainerFn fn = mia::make_trainer_fn(cfg.trainer);
  mia::StabilityEstimate est;
  est.alpha_hat = mia::estimate_error_stability(
      spec, fn, n_train, n_perturb, n_test, cfg.master_seed, scfg);
  est.beta_hat = mia::estimate_training_stability(spec, fn, n_train, n_perturb,
                                                  cfg.master_seed, scfg);
  est.n_perturbations = n_perturb;
  est.n_test = n_test;
  est.trainer_fingerprint = mia::trainer_fingerprint(cfg.trainer);
  std::cout << mia::stability_to_json(est) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal evaluation of membership inference attacks"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&flags](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "TOML config file");
    cmd->add_option("--scenario", flags.scenario,
                    "ridge or dpsgd (overrides config)");
    cmd->add_option("--reps", flags.reps, "number of repetitions");
    cmd->add_option("--seed", flags.seed, "master seed");
    cmd->add_option("--out", flags.output_dir, "output directory");
    cmd->add_option("--propensity", flags.propensity,
                    "oracle|logistic|constant:<p> (restricts zero-run cells)");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate evidence only");
  add_common(simulate);

  auto* evaluate = app.add_subcommand("evaluate", "Run a full scenario");
  add_common(evaluate);
  evaluate->add_flag("--svg", flags.svg, "also render roc.svg");

  std::string bundle_dir = "out";
  bool with_dp_bound = false;
  auto* roc = app.add_subcommand("roc", "Render ROC curves from a bundle");
  roc->add_option("--bundle", bundle_dir, "bundle directory")->required();
  roc->add_flag("--dp-bound", with_dp_bound, "overlay the DP bound");

  std::size_t n_train = 200, n_perturb = 20, n_test = 500;
  auto* stability =
      app.add_subcommand("stability", "Estimate stability constants");
  add_common(stability);
  stability->add_option("--n-train", n_train, "training set size");
  stability->add_option("--n-perturb", n_perturb, "number of perturbations");
  stability->add_option("--n-test", n_test, "test sample size");

  std::string report_dir = "out";
  auto* report = app.add_subcommand("report", "Re-aggregate a bundle");
  report->add_option("--bundle", report_dir, "bundle directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_simulate(flags);
    if (evaluate->parsed()) return run_evaluate(flags);
    if (roc->parsed()) return run_roc(bundle_dir, with_dp_bound);
    if (stability->parsed()) {
      return run_stability(flags, n_train, n_perturb, n_test);
    }
    if (report->parsed()) {
      mia::reaggregate_bundle(report_dir);
      std::cout << "rewrote "
                << (std::filesystem::path(report_dir) / "metrics.csv").string()
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
