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

#include "mia/kernels.hpp"
#include "mia/propensity.hpp"
#include "mia/rng.hpp"
#include "mia/synthgen.hpp"

namespace {

mia::Matrix gaussian_rows(mia::RngStream& rng, std::size_t n, std::size_t d,
                          std::span<const double> shift = {}) {
  mia::Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      m(i, j) = rng.normal() + (shift.empty() ? 0.0 : shift[j]);
    }
  }
  return m;
}

mia::EvidenceSet evidence_from(const mia::Matrix& members,
                               const mia::Matrix& nonmembers) {
  mia::EvidenceSet ev;
  for (std::size_t i = 0; i < members.rows(); ++i) {
    const auto r = members.row(i);
    ev.records.push_back({{r.begin(), r.end()}, 0.0, 1, 0.0});
  }
  for (std::size_t i = 0; i < nonmembers.rows(); ++i) {
    const auto r = nonmembers.row(i);
    ev.records.push_back({{r.begin(), r.end()}, 0.0, 0, 0.0});
  }
  ev.recount();
  return ev;
}

}  // namespace

TEST_CASE("identical classes fit to one half everywhere") {
  mia::RngStream rng(1);
  const auto x = gaussian_rows(rng, 50, 4);
  const auto model = mia::fit_logistic(x, x);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    CHECK(model.evaluate(x.row(i)) == doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("separated 1-d classes learn a negative slope") {
  mia::RngStream rng(2);
  mia::Matrix members(30, 1), nonmembers(30, 1);
  for (std::size_t i = 0; i < 30; ++i) {
    members(i, 0) = -1.0 + 0.4 * rng.normal();
    nonmembers(i, 0) = 1.0 + 0.4 * rng.normal();
  }
  const auto model = mia::fit_logistic(members, nonmembers);
  CHECK(model.slope[0] < 0.0);
}

TEST_CASE("learned log-odds slope approaches the oracle -mu") {
  const auto spec = mia::make_problem(3, 10, 0.9);
  const std::size_t n = 10000;
  mia::RngStream rng(3);
  const auto members = gaussian_rows(rng, n, 10);
  const auto nonmembers = gaussian_rows(rng, n, 10, spec.shift);
  const auto model = mia::fit_logistic(members, nonmembers);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < 10; ++j) {
    const double diff = model.slope[j] - (-spec.shift[j]);
    num += diff * diff;
    den += spec.shift[j] * spec.shift[j];
  }
  CHECK(std::sqrt(num / den) < 0.10);
}

TEST_CASE("perfectly separable data raises the separation warning") {
  mia::Matrix members(20, 1), nonmembers(20, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    members(i, 0) = -1.0 - 0.01 * static_cast<double>(i);
    nonmembers(i, 0) = 1.0 + 0.01 * static_cast<double>(i);
  }
  mia::LogisticFitConfig cfg;
  cfg.max_iter = 200;
  const auto model = mia::fit_logistic(members, nonmembers, cfg);
  CHECK(model.separation_warning);
}

TEST_CASE("fold plan partitions with balanced sizes") {
  const auto plan = mia::make_fold_plan(103, 4, 9);
  REQUIRE(plan.assignment.size() == 103);
  std::vector<std::size_t> counts(4, 0);
  for (auto f : plan.assignment) {
    REQUIRE(f < 4);
    counts[f]++;
  }
  const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
  CHECK(*mx - *mn <= 1);
  // deterministic under seed
  const auto again = mia::make_fold_plan(103, 4, 9);
  CHECK(plan.assignment == again.assignment);
  CHECK_THROWS(mia::make_fold_plan(3, 1, 0));
  CHECK_THROWS(mia::make_fold_plan(3, 5, 0));
}

TEST_CASE("cross-fit values come from out-of-fold models only") {
  mia::RngStream rng(4);
  const auto spec = mia::make_problem(4, 5, 0.9);
  auto members = gaussian_rows(rng, 40, 5);
  auto nonmembers = gaussian_rows(rng, 40, 5, spec.shift);
  auto ev = evidence_from(members, nonmembers);
  const auto plan = mia::make_fold_plan(ev.records.size(), 2, 7);
  const auto base = mia::cross_fit(ev, plan);
  REQUIRE(base.pi_values.size() == ev.records.size());
  for (double p : base.pi_values) {
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }

  // perturb one record; only same-fold co-members keep their values
  // (they are scored by the model fit on the other fold, unchanged)
  std::size_t victim = 0;
  while (plan.assignment[victim] != 0) ++victim;
  auto mutated = ev;
  for (auto& v : mutated.records[victim].features) v += 3.0;
  const auto refit = mia::cross_fit(mutated, plan);
  for (std::size_t i = 0; i < ev.records.size(); ++i) {
    if (i == victim || plan.assignment[i] != 0) continue;
    CHECK(refit.pi_values[i] == base.pi_values[i]);
  }
}

TEST_CASE("single-class training fold is an error naming the fold") {
  mia::RngStream rng(5);
  const auto members = gaussian_rows(rng, 4, 2);
  const auto nonmembers = gaussian_rows(rng, 4, 2);
  auto ev = evidence_from(members, nonmembers);
  mia::FoldPlan plan;
  plan.k = 2;
  // fold 1 holds every non-member, so fold 1's training complement
  // (fold 0) is all members
  plan.assignment = {0, 0, 0, 0, 1, 1, 1, 1};
  CHECK_THROWS_WITH_AS(mia::cross_fit(ev, plan),
                       doctest::Contains("fold"), std::runtime_error);
}

TEST_CASE("clipping caps evaluations and bounds IPW weights") {
  auto model = mia::PropensityModel::constant(0.999);
  const auto clipped = mia::clip(model, 0.05);
  const std::vector<double> x{};
  CHECK(clipped.evaluate(x) == doctest::Approx(0.95).epsilon(1e-12));
  const auto mid = mia::clip(mia::PropensityModel::constant(0.5), 0.05);
  CHECK(mid.evaluate(x) == doctest::Approx(0.5).epsilon(1e-12));
  const double eta = 0.05;
  const double w = clipped.evaluate(x) / (1.0 - clipped.evaluate(x));
  CHECK(w <= (1.0 - eta) / eta + 1e-12);

  const auto vals = mia::clip_values({0.001, 0.5, 0.9999}, 0.01);
  CHECK(vals[0] == 0.01);
  CHECK(vals[1] == 0.5);
  CHECK(vals[2] == 0.99);
}

TEST_CASE("delta_pi constants") {
  const auto spec = mia::make_problem(6, 3, 0.9);
  const auto sample = mia::sample_shifted(spec, 50, 1);
  const auto half = mia::PropensityModel::constant(0.5);
  CHECK(mia::delta_pi(half, half, sample) == 0.0);
  const auto two_thirds = mia::PropensityModel::constant(2.0 / 3.0);
  CHECK(mia::delta_pi(half, two_thirds, sample) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("delta_pi shrinks as the fit sees more data") {
  const auto spec = mia::make_problem(7, 5, 0.9);
  const auto oracle = mia::oracle_propensity(spec, 1, 1);
  const auto probe = mia::sample_shifted(spec, 500, 99);
  std::vector<double> deltas;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> per_seed;
    for (std::uint64_t s = 0; s < 5; ++s) {
      mia::RngStream rng(mia::mix_seed(s, n));
      const auto members = gaussian_rows(rng, n, 5);
      const auto nonmembers = gaussian_rows(rng, n, 5, spec.shift);
      const auto fit = mia::fit_logistic(members, nonmembers);
      per_seed.push_back(mia::delta_pi(fit, oracle, probe));
    }
    std::sort(per_seed.begin(), per_seed.end());
    deltas.push_back(per_seed[2]);  // median of 5
  }
  CHECK(deltas[1] < deltas[0]);
  CHECK(deltas[2] < deltas[1]);
}

TEST_CASE("propensity model json roundtrip") {
  mia::PropensityModel m;
  m.kind = mia::PropensityKind::kLogistic;
  m.intercept = 0.4;
  m.slope = {1.0, -2.0};
  m.ceiling = 0.99;
  m.floor = 0.01;
  m.separation_warning = true;
  m.provenance = "test";
  const auto back = mia::propensity_from_json(mia::propensity_to_json(m));
  CHECK(back.kind == m.kind);
  CHECK(back.intercept == m.intercept);
  CHECK(back.slope == m.slope);
  CHECK(back.ceiling == m.ceiling);
  CHECK(back.floor == m.floor);
  CHECK(back.separation_warning == m.separation_warning);
  CHECK(back.provenance == m.provenance);
}
