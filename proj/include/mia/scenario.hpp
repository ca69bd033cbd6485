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

#ifndef MIA_SCENARIO_HPP
#define MIA_SCENARIO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mia/estimators.hpp"
#include "mia/synthgen.hpp"
#include "mia/trainers.hpp"

// Config-driven scenario runner: evidence collection across the three
// regimes, estimator evaluation, and the report bundle (metrics table,
// ROC CSVs, DP bound, manifest, optional SVG).

namespace mia {

enum class Scenario { kRidgeSynthetic, kDpSgdSynthetic, kCustom };

// One row of the metrics table: a regime paired with the propensity
// treatment it implies. Estimators are applied per cell.
enum class RegimeCell {
  kMultiRun,
  kOneRun,
  kZeroRunRaw,
  kZeroRunOracle,
  kZeroRunLearned,
};

struct RunConfig {
  Scenario scenario = Scenario::kRidgeSynthetic;
  std::vector<RegimeCell> regimes = {
      RegimeCell::kMultiRun, RegimeCell::kOneRun, RegimeCell::kZeroRunRaw,
      RegimeCell::kZeroRunOracle, RegimeCell::kZeroRunLearned};
  std::vector<EstimatorKind> estimators = {EstimatorKind::kClassical,
                                           EstimatorKind::kIpw};
  std::size_t repetitions = 1;
  std::uint64_t master_seed = 0;
  std::string output_dir = "out";
  bool write_svg = false;

  // data-generating process
  std::size_t dim = 2500;
  double corr = 0.90;
  double label_noise_sd = 1.0;
  TeacherScale teacher_scale = TeacherScale::kGaussianNorm;

  TrainerConfig trainer;

  // sample sizes
  std::size_t n_train = 2000;         // base training set
  std::size_t n_eval_multirun = 400;  // total multi-run evaluation points
  std::size_t n_onerun = 4000;        // one-run pool (half included)
  std::size_t n_zerorun = 2000;       // per arm in the zero-run regime

  // propensity handling
  double eta = 0.01;
  std::size_t folds = 2;

  std::vector<double> tpr_alphas = {0.2};
  double hoeffding_t = 3.0;
  double dp_epsilon = 0.602;
  double dp_delta = 0.01;
};

RunConfig default_config(Scenario scenario);

// Minimal TOML subset: [section], key = value with strings, numbers,
// booleans and flat arrays. Unknown keys are an error.
RunConfig config_from_toml(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

struct CellResult {
  std::string label;  // <regime>_<estimator>
  bool ok = false;
  std::string error;
  MetricsReport mean;
  MetricsReport stddev;  // zero when repetitions == 1
  std::size_t repetitions = 0;
};

struct ReportBundle {
  std::vector<CellResult> cells;
  std::vector<std::string> files;  // paths relative to output_dir
  std::string output_dir;
  bool all_ok = false;
};

ReportBundle run_scenario(const RunConfig& cfg);

// Re-reads roc_*.csv (and dp_bound.csv when requested) from a bundle
// directory and writes roc.svg next to them. Missing curve files are
// reported in the return value, not fatal.
std::vector<std::string> render_roc(const std::string& bundle_dir,
                                    bool with_dp_bound);

// Rebuilds metrics.csv from metrics.json in an existing bundle.
void reaggregate_bundle(const std::string& bundle_dir);

std::string regime_cell_name(RegimeCell cell);
std::string estimator_name(EstimatorKind kind);

}  // namespace mia

#endif  // MIA_SCENARIO_HPP
