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

#include <cmath>
#include <numbers>
#include <vector>

#include "mia/kernels.hpp"
#include "mia/rng.hpp"
#include "mia/synthgen.hpp"

namespace {

double norm(const std::vector<double>& v) {
  return std::sqrt(mia::kernels::squared_norm(v));
}

double log_gaussian_density(std::span<const double> a,
                            std::span<const double> mean) {
  double q = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double c = a[i] - (mean.empty() ? 0.0 : mean[i]);
    q += c * c;
  }
  return -0.5 * q -
         0.5 * static_cast<double>(a.size()) *
             std::log(2.0 * std::numbers::pi);
}

}  // namespace

TEST_CASE("make_problem satisfies the correlation constraint") {
  // experiment-scale instance: d=400, corr=0.90
  const auto spec = mia::make_problem(12, 400, 0.90);
  const double dot = mia::kernels::dot(spec.teacher, spec.shift);
  CHECK(dot / (norm(spec.teacher) * norm(spec.shift)) ==
        doctest::Approx(0.90).epsilon(1e-9));
  CHECK(norm(spec.shift) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm(spec.teacher) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("corr=1 collapses the teacher onto the shift direction") {
  const auto spec = mia::make_problem(3, 5, 1.0);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(spec.teacher[i] ==
          doctest::Approx(spec.shift[i]).epsilon(1e-12));
  }
}

TEST_CASE("corr=0 gives an orthogonal teacher") {
  const auto spec = mia::make_problem(4, 5, 0.0);
  CHECK(std::abs(mia::kernels::dot(spec.teacher, spec.shift)) < 1e-9);
}

TEST_CASE("correlation constraint holds over 1000 seeds") {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto spec = mia::make_problem(s, 12, 0.7);
    const double c = mia::kernels::dot(spec.teacher, spec.shift) /
                     (norm(spec.teacher) * norm(spec.shift));
    REQUIRE(c == doctest::Approx(0.7).epsilon(1e-9));
  }
}

TEST_CASE("dim < 2 with |corr| < 1 is rejected") {
  CHECK_THROWS(mia::make_problem(0, 1, 0.5));
}

TEST_CASE("gaussian teacher scale changes only the magnitude") {
  const auto unit = mia::make_problem(9, 50, 0.9, mia::TeacherScale::kUnitNorm);
  const auto gauss =
      mia::make_problem(9, 50, 0.9, mia::TeacherScale::kGaussianNorm);
  CHECK(norm(unit.teacher) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm(gauss.teacher) > 2.0);  // ||g|| concentrates near sqrt(50)
  const double c = mia::kernels::dot(gauss.teacher, gauss.shift) /
                   (norm(gauss.teacher) * norm(gauss.shift));
  CHECK(c == doctest::Approx(0.9).epsilon(1e-9));
}

TEST_CASE("noiseless labels satisfy b = a . teacher exactly") {
  auto spec = mia::make_problem(5, 8, 0.9);
  spec.label_noise_sd = 0.0;
  const auto data = mia::sample_members(spec, 20, 77);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data.labels[i] ==
          doctest::Approx(mia::kernels::dot(data.point(i), spec.teacher))
              .epsilon(1e-12));
  }
}

TEST_CASE("sampling is bit-deterministic under seed") {
  const auto spec = mia::make_problem(5, 8, 0.9);
  const auto a = mia::sample_members(spec, 50, 123);
  const auto b = mia::sample_members(spec, 50, 123);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.labels[i] == b.labels[i]);
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(a.features(i, j) == b.features(i, j));
    }
  }
}

TEST_CASE("zero shift makes sample_shifted identical to sample_members") {
  auto spec = mia::make_problem(6, 8, 0.9);
  std::fill(spec.shift.begin(), spec.shift.end(), 0.0);
  const auto m = mia::sample_members(spec, 30, 99);
  const auto s = mia::sample_shifted(spec, 30, 99);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m.labels[i] == s.labels[i]);
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(m.features(i, j) == s.features(i, j));
    }
  }
}

TEST_CASE("shifted sample mean concentrates around mu") {
  const auto spec = mia::make_problem(7, 10, 0.9);
  const std::size_t n = 100000;
  const auto data = mia::sample_shifted(spec, n, 11);
  std::vector<double> mean(10, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mia::kernels::axpy(1.0 / static_cast<double>(n), data.point(i), mean);
  }
  mia::kernels::axpy(-1.0, spec.shift, mean);
  CHECK(norm(mean) < 3.0 * std::sqrt(10.0 / static_cast<double>(n)));
}

TEST_CASE("oracle propensity is constant 1/2 without shift") {
  auto spec = mia::make_problem(8, 6, 0.9);
  std::fill(spec.shift.begin(), spec.shift.end(), 0.0);
  const auto pi = mia::oracle_propensity(spec, 100, 100);
  mia::RngStream rng(4);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> x(6);
    rng.fill_normal(x);
    CHECK(pi.evaluate(x) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("density crossover at a = mu/2 gives 1/2") {
  const auto spec = mia::make_problem(9, 6, 0.9);
  const auto pi = mia::oracle_propensity(spec, 50, 50);
  std::vector<double> x = spec.shift;
  mia::kernels::scale(0.5, x);
  CHECK(pi.evaluate(x) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("oracle propensity matches direct density evaluation") {
  // independent oracle: n1 pT(a) / (n1 pT(a) + n0 p0(a))
  const auto spec = mia::make_problem(10, 3, 0.9);
  const std::vector<double> zero(3, 0.0);
  const auto pi = mia::oracle_propensity(spec, 70, 30);
  mia::RngStream rng(21);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(3);
    rng.fill_normal(x);
    const double log_pt = log_gaussian_density(x, zero);
    const double log_p0 = log_gaussian_density(x, spec.shift);
    const double r = std::exp(log_pt - log_p0);
    const double expect = 70.0 * r / (70.0 * r + 30.0);
    REQUIRE(pi.evaluate(x) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("problem spec json roundtrip") {
  const auto spec = mia::make_problem(11, 7, 0.8);
  const auto back = mia::problem_from_json(mia::problem_to_json(spec));
  CHECK(back.dim == spec.dim);
  CHECK(back.teacher == spec.teacher);
  CHECK(back.shift == spec.shift);
  CHECK(back.label_noise_sd == spec.label_noise_sd);
  CHECK(back.teacher_shift_corr == spec.teacher_shift_corr);
}
