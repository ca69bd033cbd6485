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
#include <cmath>
#include <vector>

#include "mia/estimators.hpp"
#include "mia/outcome.hpp"
#include "mia/rng.hpp"

namespace {

// evidence from plain score lists; features default to the score itself
mia::EvidenceSet make_evidence(const std::vector<double>& member_scores,
                               const std::vector<double>& nonmember_scores) {
  mia::EvidenceSet ev;
  for (double s : member_scores) {
    ev.records.push_back({{s}, 0.0, 1, s});
  }
  for (double s : nonmember_scores) {
    ev.records.push_back({{s}, 0.0, 0, s});
  }
  ev.orientation = mia::ScoreOrientation::kHigherScoreMeansMember;
  ev.recount();
  return ev;
}

double brute_force_auc(const std::vector<double>& m,
                       const std::vector<double>& n) {
  double s = 0.0;
  for (double a : m) {
    for (double b : n) s += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return s / (static_cast<double>(m.size()) * static_cast<double>(n.size()));
}

}  // namespace

TEST_CASE("ate_dim on tiny instances") {
  CHECK(mia::ate_dim(make_evidence({0.8}, {0.2})) ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK(std::abs(mia::ate_dim(make_evidence({0.4, 0.4}, {0.4, 0.4, 0.4}))) <
        1e-15);
  mia::EvidenceSet no_controls = make_evidence({1.0}, {});
  CHECK_THROWS(mia::ate_dim(no_controls));
}

TEST_CASE("hoeffding halfwidth formula and flag gating") {
  CHECK(mia::hoeffding_halfwidth(100, 100, 2.0) ==
        doctest::Approx(0.4).epsilon(1e-12));
  CHECK(mia::hoeffding_halfwidth(100000000, 100000000, 2.0) < 1e-3);
  auto ev = make_evidence({0.3, 0.9}, {0.1, 0.5});
  CHECK_THROWS(mia::hoeffding_halfwidth(ev, 2.0));  // not normalized
  ev.scores_normalized = true;
  CHECK(mia::hoeffding_halfwidth(ev, 2.0) ==
        doctest::Approx(2.0 * std::sqrt(2.0 * 2.0 / 2.0)).epsilon(1e-12));
}

TEST_CASE("perfect separation gives AUC 1 through (0,1)") {
  const auto ev = make_evidence({1.0, 1.0}, {0.0, 0.0});
  const auto curve = mia::classical_roc(ev);
  CHECK(mia::trapezoid_area(curve) == doctest::Approx(1.0).epsilon(1e-15));
  bool through_corner = false;
  for (const auto& p : curve.points) {
    through_corner |= p.fpr == 0.0 && p.tpr == 1.0;
  }
  CHECK(through_corner);
}

TEST_CASE("identical score multisets sit on the diagonal") {
  const auto ev = make_evidence({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
  CHECK(mia::auc_pairwise(ev) == doctest::Approx(0.5).epsilon(1e-15));
  const auto curve = mia::classical_roc(ev);
  for (const auto& p : curve.points) {
    CHECK(std::abs(p.tpr - p.fpr) <= 1.0 / 3.0 + 1e-12);
  }
}

TEST_CASE("pairwise AUC with the tie rule") {
  const auto ev = make_evidence({2.0, 3.0}, {1.0, 2.0});
  CHECK(mia::auc_pairwise(ev) == doctest::Approx(0.875).epsilon(1e-15));
}

TEST_CASE("pairwise AUC equals brute force and trapezoid, 1000 instances") {
  mia::RngStream rng(100);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> m(7), n(7);
    for (auto& v : m) v = std::round(rng.normal() * 2.0) / 2.0;  // force ties
    for (auto& v : n) v = std::round(rng.normal() * 2.0) / 2.0;
    const auto ev = make_evidence(m, n);
    const double pairwise = mia::auc_pairwise(ev);
    REQUIRE(std::abs(pairwise - brute_force_auc(m, n)) <= 1e-15);
    const double trap = mia::trapezoid_area(mia::classical_roc(ev));
    REQUIRE(std::abs(pairwise - trap) <= 1e-12);
  }
}

TEST_CASE("tpr_at_fpr order-statistic examples") {
  const auto ev = make_evidence({5.0, 5.0}, {1.0, 2.0, 3.0, 4.0});
  CHECK(mia::tpr_at_fpr(ev, 0.25) == doctest::Approx(1.0).epsilon(1e-15));
  // null attack: exceedance at the alpha-quantile is ~alpha
  std::vector<double> same(100);
  for (std::size_t i = 0; i < 100; ++i) same[i] = static_cast<double>(i);
  const auto null_ev = make_evidence(same, same);
  CHECK(mia::tpr_at_fpr(null_ev, 0.2) == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("weighted quantile reductions and brute force") {
  const std::vector<double> scores{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> ones(4, 1.0);
  CHECK(mia::weighted_quantile(scores, ones, 0.25) == 4.0);
  const std::vector<double> two_s{1.0, 2.0}, two_w{0.0, 1.0};
  CHECK(mia::weighted_quantile(two_s, two_w, 0.5) == 2.0);
  const std::vector<double> one_s{1.0}, zero_w{0.0};
  CHECK_THROWS(mia::weighted_quantile(one_s, zero_w, 0.5));

  mia::RngStream rng(200);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + rng.uniform_below(11);
    std::vector<double> s(n), w(n);
    for (auto& v : s) v = std::round(rng.normal() * 2.0) / 2.0;
    // integer weights: every partial sum is exact, so the oracle's
    // summation order cannot drift from the implementation's
    for (auto& v : w) v = 1.0 + static_cast<double>(rng.uniform_below(8));
    const double alpha = rng.uniform();
    const double got = mia::weighted_quantile(s, w, alpha);
    // exhaustive scan over candidate thresholds
    double total = 0.0;
    for (double v : w) total += v;
    std::vector<double> cand = s;
    std::sort(cand.begin(), cand.end());
    double expect = cand.back();
    bool found = false;
    for (double thr : cand) {
      double mass = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (s[i] >= thr) mass += w[i];
      }
      if (mass / total <= alpha) {
        expect = thr;
        found = true;
        break;
      }
    }
    if (!found) expect = cand.back();
    REQUIRE(got == expect);
  }
}

TEST_CASE("IPW reductions to classical under constant 1/2") {
  mia::RngStream rng(300);
  std::vector<double> m(40), n(40);
  for (auto& v : m) v = rng.normal() + 0.3;
  for (auto& v : n) v = rng.normal();
  const auto ev = make_evidence(m, n);
  const std::vector<double> half(80, 0.5);

  CHECK(std::abs(mia::ipw_ate(ev, half) - mia::ate_dim(ev)) <= 1e-12);

  const auto classical = mia::classical_roc(ev);
  const auto weighted = mia::ipw_roc(ev, half);
  REQUIRE(classical.points.size() == weighted.points.size());
  for (std::size_t i = 0; i < classical.points.size(); ++i) {
    CHECK(std::abs(classical.points[i].fpr - weighted.points[i].fpr) <= 1e-12);
    CHECK(std::abs(classical.points[i].tpr - weighted.points[i].tpr) <= 1e-12);
  }
  CHECK(std::abs(mia::ipw_tpr_at_fpr(ev, half, 0.2) -
                 mia::tpr_at_fpr(ev, 0.2)) <= 1e-12);
}

TEST_CASE("IPW with zero propensity drops the control arm of the ATE") {
  const auto ev = make_evidence({1.0, 3.0}, {10.0, 20.0});
  const std::vector<double> zero(4, 0.0);
  CHECK(mia::ipw_ate(ev, zero) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("G-formula trivial outcome models") {
  const auto ev = make_evidence({1.0, 3.0}, {5.0, 7.0});
  const auto zero = mia::constant_outcome(0.0, 0.0, {0.0, 1.0});
  CHECK(mia::g_formula_ate(ev, zero) == doctest::Approx(2.0).epsilon(1e-15));

  // self-prediction: mu0(x) equals the member's own score (features
  // carry the score in this fixture)
  mia::OutcomeModel self;
  self.threshold_grid = {0.0, 10.0};
  self.mean_fn = [](std::span<const double> x) { return x[0]; };
  self.exceedance_fn = [](std::size_t, std::span<const double>) {
    return 0.0;
  };
  CHECK(mia::g_formula_ate(ev, self) == 0.0);
}

TEST_CASE("AIPW with zero propensity equals the G-formula") {
  const auto ev = make_evidence({1.0, 4.0}, {2.0, 6.0});
  const auto om = mia::constant_outcome(1.5, 0.0, {0.0, 1.0});
  const std::vector<double> zero(4, 0.0);
  CHECK(mia::aipw_ate(ev, zero, om) == mia::g_formula_ate(ev, om));
}

TEST_CASE("covariate-free G-formula curve tracks the classical curve") {
  mia::RngStream rng(400);
  std::vector<double> m(400), n(400);
  for (auto& v : m) v = rng.normal() + 0.5;
  for (auto& v : n) v = rng.normal();
  const auto ev = make_evidence(m, n);
  const auto om = mia::covariate_free_outcome(ev, 201);
  const auto g_curve = mia::g_formula_fpr_curve(ev, om);
  const double auc_g = mia::trapezoid_area(g_curve);
  const double auc_c = mia::auc_pairwise(ev);
  CHECK(std::abs(auc_g - auc_c) <= 1.0 / std::sqrt(400.0));
}

TEST_CASE("dp bound: null budget is the diagonal") {
  const auto curve = mia::dp_roc_bound(0.0, 0.0);
  CHECK(curve.points.size() == 1001);
  for (const auto& p : curve.points) {
    CHECK(p.tpr == doctest::Approx(p.fpr).epsilon(1e-15));
  }
}

TEST_CASE("dp bound at the reference parameters") {
  const auto curve = mia::dp_roc_bound(0.602, 0.01);
  CHECK(curve.points.front().fpr == 0.0);
  CHECK(curve.points.front().tpr == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("dp bound curves are concave, monotone, above the diagonal") {
  mia::RngStream rng(500);
  for (int t = 0; t < 10000; ++t) {
    const double eps = rng.uniform() * 3.0;
    const double delta = rng.uniform() * 0.2;
    const auto curve = mia::dp_roc_bound(eps, delta);
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      REQUIRE(curve.points[i].tpr >= curve.points[i].fpr - 1e-12);
      if (i > 0) {
        REQUIRE(curve.points[i].tpr >= curve.points[i - 1].tpr - 1e-12);
      }
      if (i > 1) {
        // second difference non-positive on the uniform grid
        const double d2 = curve.points[i].tpr - 2.0 * curve.points[i - 1].tpr +
                          curve.points[i - 2].tpr;
        REQUIRE(d2 <= 1e-9);
      }
    }
  }
}

TEST_CASE("youden sup of degenerate curves") {
  mia::RocCurve diag;
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    diag.points.push_back({v, v, 0.0});
  }
  CHECK(mia::youden_sup(diag) == 0.0);
  mia::RocCurve perfect;
  perfect.points = {{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {1.0, 1.0, 0.0}};
  CHECK(mia::youden_sup(perfect) == 1.0);
}

TEST_CASE("curve interpolation at arbitrary fpr") {
  mia::RocCurve c;
  c.points = {{0.0, 0.0, 0.0}, {0.5, 0.8, 0.0}, {1.0, 1.0, 0.0}};
  CHECK(mia::curve_tpr_at(c, 0.25) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(mia::curve_tpr_at(c, 0.75) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("report serialization carries the metric fields") {
  mia::MetricsReport r;
  r.auc = 0.61;
  r.ate = -12.5;
  r.youden_sup = 0.2;
  r.tpr_at_fpr[0.2] = 0.33;
  r.hoeffding_halfwidth = 0.4;
  r.estimator_kind = mia::EstimatorKind::kIpw;
  r.regime = mia::Regime::kZeroRun;
  const std::string json = mia::report_to_json(r);
  CHECK(json.find("0.61") != std::string::npos);
  const std::string row = mia::report_to_csv_row(r, "cell_a");
  CHECK(row.find("cell_a") != std::string::npos);
  CHECK(!mia::report_csv_header().empty());
}
