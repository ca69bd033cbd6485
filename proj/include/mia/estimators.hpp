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

#ifndef MIA_ESTIMATORS_HPP
#define MIA_ESTIMATORS_HPP

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mia/propensity_model.hpp"
#include "mia/protocols.hpp"

// Classical and causal evaluation metrics: group-mean ATE, ROC/AUC,
// TPR at fixed FPR, the IPW / G-formula / AIPW debiased estimators,
// Hoeffding confidence half-widths and the (epsilon, delta)-DP ROC
// upper bound.

namespace mia {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // fpr non-decreasing, endpoints included
};

enum class EstimatorKind { kClassical, kIpw, kGFormula, kAipw };

struct MetricsReport {
  double auc = 0.0;
  double ate = 0.0;
  std::map<double, double> tpr_at_fpr;
  double youden_sup = 0.0;
  std::optional<double> hoeffding_halfwidth;
  EstimatorKind estimator_kind = EstimatorKind::kClassical;
  Regime regime = Regime::kMultiRun;
};

// mu0 family for G-formula / AIPW: a control-arm conditional mean and
// a threshold-indexed exceedance family P(Y(0) >= t | x), monotone
// non-increasing in t after isotonic repair.
struct OutcomeModel {
  std::function<double(std::span<const double>)> mean_fn;
  std::vector<double> threshold_grid;
  // exceedance_fn(grid_index, x) in [0, 1]
  std::function<double(std::size_t, std::span<const double>)> exceedance_fn;
};

// --- classical ---

double ate_dim(const EvidenceSet& ev);

double hoeffding_halfwidth(std::size_t n1, std::size_t n0, double t);

// Checked variant: requires ev.scores_normalized.
double hoeffding_halfwidth(const EvidenceSet& ev, double t);

RocCurve classical_roc(const EvidenceSet& ev);

// Pair-counting Mann-Whitney with ties worth 1/2; equals the
// trapezoidal area under classical_roc.
double auc_pairwise(const EvidenceSet& ev);

double tpr_at_fpr(const EvidenceSet& ev, double alpha);

// --- propensity-weighted ---

// pi-hat per record, aligned with ev.records.
std::vector<double> evaluate_propensity(const EvidenceSet& ev,
                                        const PropensityModel& pi);

double ipw_ate(const EvidenceSet& ev, std::span<const double> pi_values);
double ipw_ate(const EvidenceSet& ev, const PropensityModel& pi);

RocCurve ipw_roc(const EvidenceSet& ev, std::span<const double> pi_values);
RocCurve ipw_roc(const EvidenceSet& ev, const PropensityModel& pi);

// Smallest observed score t with weighted exceedance mass <= alpha.
double weighted_quantile(std::span<const double> scores,
                         std::span<const double> weights, double alpha);

double ipw_tpr_at_fpr(const EvidenceSet& ev,
                      std::span<const double> pi_values, double alpha);
double ipw_tpr_at_fpr(const EvidenceSet& ev, const PropensityModel& pi,
                      double alpha);

// --- outcome-model based ---

double g_formula_ate(const EvidenceSet& ev, const OutcomeModel& om);

double aipw_ate(const EvidenceSet& ev, std::span<const double> pi_values,
                const OutcomeModel& om);

// FPR arm from averaged exceedance regressors over members; when
// pi_values is non-empty the AIPW correction term is applied.
RocCurve g_formula_fpr_curve(const EvidenceSet& ev, const OutcomeModel& om,
                             std::span<const double> pi_values = {});

// --- curve utilities ---

double trapezoid_area(const RocCurve& curve);

double youden_sup(const RocCurve& curve);

// TPR of the step curve at an arbitrary FPR (linear interpolation).
double curve_tpr_at(const RocCurve& curve, double fpr);

// y = min(1, e^eps x + delta, 1 - e^-eps (1 - delta - x)) on a uniform
// 1001-point FPR grid.
RocCurve dp_roc_bound(double epsilon, double delta);

void write_roc_csv(const RocCurve& curve, const std::string& path);

std::string report_to_json(const MetricsReport& report);
std::string report_csv_header();
std::string report_to_csv_row(const MetricsReport& report,
                              const std::string& row_label);

}  // namespace mia

#endif  // MIA_ESTIMATORS_HPP
