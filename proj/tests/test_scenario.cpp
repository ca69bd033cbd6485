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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mia/scenario.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// small enough to run inside a unit test, still touching all 5 cells
mia::RunConfig tiny_config(const std::string& out) {
  auto cfg = mia::default_config(mia::Scenario::kRidgeSynthetic);
  cfg.output_dir = out;
  cfg.dim = 60;
  cfg.trainer.ridge_lambda = 100.0;
  cfg.n_train = 40;
  cfg.n_eval_multirun = 24;
  cfg.n_onerun = 60;
  cfg.n_zerorun = 50;
  cfg.repetitions = 2;
  cfg.master_seed = 5;
  return cfg;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("default configs encode the two synthetic scenarios") {
  const auto ridge = mia::default_config(mia::Scenario::kRidgeSynthetic);
  CHECK(ridge.dim == 2500);
  CHECK(ridge.corr == 0.90);
  CHECK(ridge.n_train == 2000);
  CHECK(ridge.trainer.variant == mia::TrainerVariant::kRidgeClosedForm);
  CHECK(ridge.eta == 0.01);
  CHECK(ridge.folds == 2);

  const auto dp = mia::default_config(mia::Scenario::kDpSgdSynthetic);
  CHECK(dp.trainer.variant == mia::TrainerVariant::kDpSgd);
  CHECK(dp.dim == 400);
  CHECK(dp.trainer.clip_norm == 1.0);
  CHECK(dp.dp_epsilon == doctest::Approx(0.602));
  CHECK(dp.dp_delta == doctest::Approx(0.01));
}

TEST_CASE("toml subset parser") {
  const std::string text = R"(
# comment
scenario = "ridge_synthetic"
repetitions = 3
master_seed = 17
write_svg = true

[problem]
dim = 80
corr = 0.5

[trainer]
ridge_lambda = 250.0

[sizes]
n_train = 64

[propensity]
eta = 0.02
folds = 3

[metrics]
tpr_alphas = [0.1, 0.2]
)";
  const auto cfg = mia::config_from_toml(text);
  CHECK(cfg.scenario == mia::Scenario::kRidgeSynthetic);
  CHECK(cfg.repetitions == 3);
  CHECK(cfg.master_seed == 17);
  CHECK(cfg.write_svg);
  CHECK(cfg.dim == 80);
  CHECK(cfg.corr == 0.5);
  CHECK(cfg.trainer.ridge_lambda == 250.0);
  CHECK(cfg.n_train == 64);
  CHECK(cfg.eta == 0.02);
  CHECK(cfg.folds == 3);
  REQUIRE(cfg.tpr_alphas.size() == 2);
  CHECK(cfg.tpr_alphas[1] == 0.2);
}

TEST_CASE("unknown toml keys are rejected") {
  CHECK_THROWS(mia::config_from_toml("mystery_key = 1\n"));
  CHECK_THROWS(mia::config_from_toml("[problem]\nshape = 3\n"));
}

TEST_CASE("empty regime grid is an error") {
  auto cfg = tiny_config("unused");
  cfg.regimes.clear();
  CHECK_THROWS(mia::run_scenario(cfg));
}

TEST_CASE("bundle shape contract") {
  TempDir tmp("mia_scen_shape");
  const auto cfg = tiny_config(tmp.path.string());
  const auto bundle = mia::run_scenario(cfg);

  CHECK(bundle.all_ok);
  // classical on the 3 uncorrected cells, ipw on oracle and learned
  CHECK(bundle.cells.size() >= 5);
  for (const auto& cell : bundle.cells) {
    INFO(cell.label, ": ", cell.error);
    CHECK(cell.ok);
    CHECK(cell.repetitions == 2);
  }

  for (const char* name :
       {"metrics.csv", "metrics.json", "dp_bound.csv", "manifest.json"}) {
    CHECK(fs::exists(tmp.path / name));
  }
  std::size_t roc_files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path)) {
    const auto fn = e.path().filename().string();
    if (fn.rfind("roc_", 0) == 0 && e.path().extension() == ".csv") {
      ++roc_files;
      // header plus at least two curve points
      std::ifstream in(e.path());
      std::string line;
      std::size_t lines = 0;
      while (std::getline(in, line)) {
        if (!line.empty()) ++lines;
      }
      CHECK(lines >= 3);
    }
  }
  CHECK(roc_files >= 4);

  const auto manifest = slurp(tmp.path / "manifest.json");
  CHECK(manifest.find("master_seed") != std::string::npos);
  CHECK(manifest.find("wall_time_ms") != std::string::npos);
  CHECK(manifest.find("metrics.csv") != std::string::npos);
}

TEST_CASE("metrics output is byte-identical across reruns") {
  TempDir a("mia_scen_det_a"), b("mia_scen_det_b");
  auto cfg_a = tiny_config(a.path.string());
  auto cfg_b = tiny_config(b.path.string());
  (void)mia::run_scenario(cfg_a);
  (void)mia::run_scenario(cfg_b);
  CHECK(slurp(a.path / "metrics.csv") == slurp(b.path / "metrics.csv"));
  CHECK(slurp(a.path / "metrics.json") == slurp(b.path / "metrics.json"));
  CHECK(slurp(a.path / "dp_bound.csv") == slurp(b.path / "dp_bound.csv"));
  // manifest differs only through timing; hashes of data files must match
}

TEST_CASE("different master seeds move the metrics") {
  TempDir a("mia_scen_seed_a"), b("mia_scen_seed_b");
  auto cfg_a = tiny_config(a.path.string());
  auto cfg_b = tiny_config(b.path.string());
  cfg_b.master_seed = 6;
  (void)mia::run_scenario(cfg_a);
  (void)mia::run_scenario(cfg_b);
  CHECK(slurp(a.path / "metrics.csv") != slurp(b.path / "metrics.csv"));
}

TEST_CASE("render_roc writes a deterministic svg and reports gaps") {
  TempDir tmp("mia_scen_svg");
  const auto cfg = tiny_config(tmp.path.string());
  (void)mia::run_scenario(cfg);

  const auto missing = mia::render_roc(tmp.path.string(), true);
  CHECK(missing.empty());
  REQUIRE(fs::exists(tmp.path / "roc.svg"));
  const auto first = slurp(tmp.path / "roc.svg");
  CHECK(first.find("<svg") != std::string::npos);
  (void)mia::render_roc(tmp.path.string(), true);
  CHECK(slurp(tmp.path / "roc.svg") == first);

  // remove the bound curve: named as missing, svg still renders
  fs::remove(tmp.path / "dp_bound.csv");
  const auto gaps = mia::render_roc(tmp.path.string(), true);
  REQUIRE(gaps.size() == 1);
  CHECK(gaps[0] == "dp_bound.csv");
  CHECK(fs::exists(tmp.path / "roc.svg"));
}

TEST_CASE("reaggregate rebuilds the metrics table from json") {
  TempDir tmp("mia_scen_reagg");
  const auto cfg = tiny_config(tmp.path.string());
  (void)mia::run_scenario(cfg);
  const auto original = slurp(tmp.path / "metrics.csv");
  fs::remove(tmp.path / "metrics.csv");
  mia::reaggregate_bundle(tmp.path.string());
  CHECK(slurp(tmp.path / "metrics.csv") == original);
}

TEST_CASE("cell labels are regime_estimator") {
  CHECK(mia::regime_cell_name(mia::RegimeCell::kZeroRunOracle) ==
        "zerorun_oracle");
  CHECK(mia::estimator_name(mia::EstimatorKind::kIpw) == "ipw");
}
