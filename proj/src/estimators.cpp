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

#include "mia/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mia {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_groups(const EvidenceSet& ev) {
  if (ev.n1 == 0) throw std::invalid_argument("evidence has no members (a=1)");
  if (ev.n0 == 0) {
    throw std::invalid_argument("evidence has no non-members (a=0)");
  }
}

// odds weight pi / (1 - pi) for a non-member record
double odds_weight(double pi, std::size_t index) {
  const double w = pi / (1.0 - pi);
  if (!std::isfinite(w)) {
    throw std::runtime_error("non-finite IPW weight at record " +
                             std::to_string(index) +
                             " (propensity not clipped below 1?)");
  }
  return w;
}

struct SweepEntry {
  double score;
  bool member;
  double weight;  // non-member weight; unused for members
};

// Threshold sweep over the distinct pooled scores, descending. The
// non-member arm is weight-averaged (unit weights give exact counting).
RocCurve weighted_roc(const EvidenceSet& ev,
                      std::span<const double> nonmember_weights) {
  require_groups(ev);
  std::vector<SweepEntry> entries;
  entries.reserve(ev.records.size());
  std::size_t j = 0;
  double total_weight = 0.0;
  for (const auto& r : ev.records) {
    if (r.membership == 1) {
      entries.push_back({r.score, true, 0.0});
    } else {
      const double w = nonmember_weights[j++];
      entries.push_back({r.score, false, w});
      total_weight += w;
    }
  }
  if (!(total_weight > 0.0)) {
    throw std::runtime_error("total non-member weight is zero");
  }
  std::sort(entries.begin(), entries.end(),
            [](const SweepEntry& a, const SweepEntry& b) {
              return a.score > b.score;
            });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, kInf});
  std::size_t members_seen = 0;
  double weight_seen = 0.0;
  std::size_t i = 0;
  const std::size_t n = entries.size();
  while (i < n) {
    const double v = entries[i].score;
    while (i < n && entries[i].score == v) {
      if (entries[i].member) {
        ++members_seen;
      } else {
        weight_seen += entries[i].weight;
      }
      ++i;
    }
    curve.points.push_back(
        {weight_seen / total_weight,
         static_cast<double>(members_seen) / static_cast<double>(ev.n1), v});
  }
  curve.points.push_back({1.0, 1.0, -kInf});
  return curve;
}

}  // namespace

double ate_dim(const EvidenceSet& ev) {
  require_groups(ev);
  double s1 = 0.0, s0 = 0.0;
  for (const auto& r : ev.records) {
    (r.membership == 1 ? s1 : s0) += r.score;
  }
  return s1 / static_cast<double>(ev.n1) - s0 / static_cast<double>(ev.n0);
}

double hoeffding_halfwidth(std::size_t n1, std::size_t n0, double t) {
  if (n1 == 0 || n0 == 0 || !(t > 0.0)) {
    throw std::invalid_argument("hoeffding_halfwidth: bad arguments");
  }
  return std::sqrt(2.0 * t / static_cast<double>(n1)) +
         std::sqrt(2.0 * t / static_cast<double>(n0));
}

double hoeffding_halfwidth(const EvidenceSet& ev, double t) {
  if (!ev.scores_normalized) {
    throw std::invalid_argument(
        "hoeffding_halfwidth: scores must be min-max normalized to [0, 1] "
        "(normalize_scores) before the bound applies");
  }
  return hoeffding_halfwidth(ev.n1, ev.n0, t);
}

RocCurve classical_roc(const EvidenceSet& ev) {
  require_groups(ev);
  const std::vector<double> unit(ev.n0, 1.0);
  return weighted_roc(ev, unit);
}

double auc_pairwise(const EvidenceSet& ev) {
  require_groups(ev);
  // count-based Mann-Whitney: for each distinct value, pairs won by
  // members above plus half the tied pairs; exact integers until the
  // final division, so it agrees with the trapezoidal ROC area
  std::vector<std::pair<double, bool>> entries;
  entries.reserve(ev.records.size());
  for (const auto& r : ev.records) {
    entries.emplace_back(r.score, r.membership == 1);
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  double wins = 0.0;
  std::size_t members_above = 0;
  std::size_t i = 0;
  const std::size_t n = entries.size();
  while (i < n) {
    const double v = entries[i].first;
    std::size_t m1 = 0, m0 = 0;
    while (i < n && entries[i].first == v) {
      (entries[i].second ? m1 : m0) += 1;
      ++i;
    }
    wins += static_cast<double>(m0) *
            (static_cast<double>(members_above) + 0.5 * static_cast<double>(m1));
    members_above += m1;
  }
  return wins /
         (static_cast<double>(ev.n1) * static_cast<double>(ev.n0));
}

double weighted_quantile(std::span<const double> scores,
                         std::span<const double> weights, double alpha) {
  if (scores.empty() || scores.size() != weights.size()) {
    throw std::invalid_argument("weighted_quantile: bad inputs");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weighted_quantile: w < 0");
    total += w;
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("weighted_quantile: all weights zero");
  }
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // exceedance mass above (or at) t is non-increasing in t; walk the
  // distinct scores ascending and take the first that drops to <= alpha
  double mass_below = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    const double exceedance = (total - mass_below) / total;
    if (exceedance <= alpha) return v;
    while (i < order.size() && scores[order[i]] == v) {
      mass_below += weights[order[i]];
      ++i;
    }
  }
  return scores[order.back()];  // degenerate: no threshold reaches alpha
}

double tpr_at_fpr(const EvidenceSet& ev, double alpha) {
  require_groups(ev);
  const std::vector<double> unit(ev.n0, 1.0);
  const std::vector<double> y0 = ev.nonmember_scores();
  const double t = weighted_quantile(y0, unit, alpha);
  std::size_t count = 0;
  for (const auto& r : ev.records) {
    if (r.membership == 1 && r.score >= t) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(ev.n1);
}

std::vector<double> evaluate_propensity(const EvidenceSet& ev,
                                        const PropensityModel& pi) {
  std::vector<double> values(ev.records.size());
  parallel_for(ev.records.size(), [&](std::size_t i) {
    values[i] = pi.evaluate(ev.records[i].features);
  });
  return values;
}

namespace {

// odds weights for the non-member records, in record order
std::vector<double> nonmember_odds(const EvidenceSet& ev,
                                   std::span<const double> pi_values) {
  if (pi_values.size() != ev.records.size()) {
    throw std::invalid_argument("propensity values misaligned with records");
  }
  std::vector<double> w;
  w.reserve(ev.n0);
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    if (ev.records[i].membership == 0) {
      w.push_back(odds_weight(pi_values[i], i));
    }
  }
  return w;
}

}  // namespace

double ipw_ate(const EvidenceSet& ev, std::span<const double> pi_values) {
  require_groups(ev);
  if (pi_values.size() != ev.records.size()) {
    throw std::invalid_argument("propensity values misaligned with records");
  }
  double s1 = 0.0, s0 = 0.0;
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    const auto& r = ev.records[i];
    if (r.membership == 1) {
      s1 += r.score;
    } else {
      s0 += odds_weight(pi_values[i], i) * r.score;
    }
  }
  return s1 / static_cast<double>(ev.n1) - s0 / static_cast<double>(ev.n0);
}

double ipw_ate(const EvidenceSet& ev, const PropensityModel& pi) {
  return ipw_ate(ev, evaluate_propensity(ev, pi));
}

RocCurve ipw_roc(const EvidenceSet& ev, std::span<const double> pi_values) {
  require_groups(ev);
  return weighted_roc(ev, nonmember_odds(ev, pi_values));
}

RocCurve ipw_roc(const EvidenceSet& ev, const PropensityModel& pi) {
  return ipw_roc(ev, evaluate_propensity(ev, pi));
}

double ipw_tpr_at_fpr(const EvidenceSet& ev,
                      std::span<const double> pi_values, double alpha) {
  require_groups(ev);
  const std::vector<double> w = nonmember_odds(ev, pi_values);
  const std::vector<double> y0 = ev.nonmember_scores();
  const double t = weighted_quantile(y0, w, alpha);
  std::size_t count = 0;
  for (const auto& r : ev.records) {
    if (r.membership == 1 && r.score >= t) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(ev.n1);
}

double ipw_tpr_at_fpr(const EvidenceSet& ev, const PropensityModel& pi,
                      double alpha) {
  return ipw_tpr_at_fpr(ev, evaluate_propensity(ev, pi), alpha);
}

double g_formula_ate(const EvidenceSet& ev, const OutcomeModel& om) {
  require_groups(ev);
  if (!om.mean_fn) throw std::invalid_argument("outcome model has no mean_fn");
  double sum = 0.0;
  for (const auto& r : ev.records) {
    if (r.membership != 1) continue;
    const double mu = om.mean_fn(r.features);
    if (!std::isfinite(mu)) {
      throw std::runtime_error("outcome model returned non-finite value");
    }
    sum += r.score - mu;
  }
  return sum / static_cast<double>(ev.n1);
}

double aipw_ate(const EvidenceSet& ev, std::span<const double> pi_values,
                const OutcomeModel& om) {
  const double g = g_formula_ate(ev, om);
  if (pi_values.size() != ev.records.size()) {
    throw std::invalid_argument("propensity values misaligned with records");
  }
  double correction = 0.0;
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    const auto& r = ev.records[i];
    if (r.membership != 0) continue;
    const double mu = om.mean_fn(r.features);
    correction += odds_weight(pi_values[i], i) * (r.score - mu);
  }
  return g - correction / static_cast<double>(ev.n1);
}

RocCurve g_formula_fpr_curve(const EvidenceSet& ev, const OutcomeModel& om,
                             std::span<const double> pi_values) {
  require_groups(ev);
  if (!om.exceedance_fn || om.threshold_grid.empty()) {
    throw std::invalid_argument("outcome model has no exceedance family");
  }
  const bool aipw = !pi_values.empty();
  std::vector<double> grid = om.threshold_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, kInf});
  double fpr_running = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    // grid index in the ascending order the model was fitted with
    const std::size_t idx = grid.size() - 1 - g;
    double fpr_sum = 0.0;
    std::size_t exceed = 0;
    for (std::size_t i = 0; i < ev.records.size(); ++i) {
      const auto& r = ev.records[i];
      if (r.membership == 1) {
        fpr_sum += om.exceedance_fn(idx, r.features);
        if (r.score >= t) ++exceed;
      } else if (aipw) {
        fpr_sum -= odds_weight(pi_values[i], i) *
                   ((r.score >= t ? 1.0 : 0.0) -
                    om.exceedance_fn(idx, r.features));
      }
    }
    double fpr = fpr_sum / static_cast<double>(ev.n1);
    fpr = std::clamp(fpr, 0.0, 1.0);
    fpr_running = std::max(fpr_running, fpr);  // keep the sweep monotone
    const double tpr =
        static_cast<double>(exceed) / static_cast<double>(ev.n1);
    curve.points.push_back({fpr_running, tpr, t});
  }
  curve.points.push_back({1.0, 1.0, -kInf});
  return curve;
}

double trapezoid_area(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    area += 0.5 * (a.tpr + b.tpr) * (b.fpr - a.fpr);
  }
  return area;
}

double youden_sup(const RocCurve& curve) {
  if (curve.points.empty()) {
    throw std::invalid_argument("youden_sup: empty curve");
  }
  double best = -kInf;
  for (const auto& p : curve.points) best = std::max(best, p.tpr - p.fpr);
  return best;
}

double curve_tpr_at(const RocCurve& curve, double fpr) {
  const auto& pts = curve.points;
  if (pts.empty()) throw std::invalid_argument("curve_tpr_at: empty curve");
  if (fpr <= pts.front().fpr) return pts.front().tpr;
  if (fpr >= pts.back().fpr) return pts.back().tpr;
  // upper envelope: at a vertical segment, take the top point
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].fpr >= fpr) {
      if (pts[i].fpr == fpr) {
        double top = pts[i].tpr;
        std::size_t j = i;
        while (j + 1 < pts.size() && pts[j + 1].fpr == fpr) {
          top = std::max(top, pts[++j].tpr);
        }
        return top;
      }
      const auto& a = pts[i - 1];
      const auto& b = pts[i];
      const double u = (fpr - a.fpr) / (b.fpr - a.fpr);
      return a.tpr + u * (b.tpr - a.tpr);
    }
  }
  return pts.back().tpr;
}

RocCurve dp_roc_bound(double epsilon, double delta) {
  RocCurve curve;
  curve.points.reserve(1001);
  const double e_pos = std::exp(epsilon);
  const double e_neg = std::exp(-epsilon);
  for (int i = 0; i <= 1000; ++i) {
    const double x = static_cast<double>(i) / 1000.0;
    const double y =
        std::min({1.0, e_pos * x + delta, 1.0 - e_neg * (1.0 - delta - x)});
    curve.points.push_back({x, y, x});
  }
  return curve;
}

void write_roc_csv(const RocCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "fpr,tpr,threshold\n";
  out.precision(17);
  for (const auto& p : curve.points) {
    out << p.fpr << "," << p.tpr << "," << p.threshold << "\n";
  }
}

namespace {

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kClassical: return "classical";
    case EstimatorKind::kIpw: return "ipw";
    case EstimatorKind::kGFormula: return "g_formula";
    case EstimatorKind::kAipw: return "aipw";
  }
  return "?";
}

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::kMultiRun: return "multi_run";
    case Regime::kOneRun: return "one_run";
    case Regime::kZeroRun: return "zero_run";
  }
  return "?";
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["auc"] = report.auc;
  j["ate"] = report.ate;
  j["youden_sup"] = report.youden_sup;
  j["estimator"] = estimator_name(report.estimator_kind);
  j["regime"] = regime_name(report.regime);
  for (const auto& [alpha, tpr] : report.tpr_at_fpr) {
    j["tpr_at_fpr"][std::to_string(alpha)] = tpr;
  }
  if (report.hoeffding_halfwidth) {
    j["hoeffding_halfwidth"] = *report.hoeffding_halfwidth;
  }
  return j.dump(2);
}

std::string report_csv_header() {
  return "label,regime,estimator,auc,youden_sup,ate,tpr_at_fpr_0.2";
}

std::string report_to_csv_row(const MetricsReport& report,
                              const std::string& row_label) {
  std::ostringstream out;
  out.precision(12);
  double tpr02 = std::numeric_limits<double>::quiet_NaN();
  if (auto it = report.tpr_at_fpr.find(0.2); it != report.tpr_at_fpr.end()) {
    tpr02 = it->second;
  }
  out << row_label << "," << regime_name(report.regime) << ","
      << estimator_name(report.estimator_kind) << "," << report.auc << ","
      << report.youden_sup << "," << report.ate << "," << tpr02;
  return out.str();
}

}  // namespace mia
