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
#include <vector>

#include "mia/kernels.hpp"
#include "mia/rng.hpp"

namespace {

std::vector<double> random_vec(mia::RngStream& rng, std::size_t n) {
  std::vector<double> v(n);
  rng.fill_normal(v);
  return v;
}

}  // namespace

TEST_CASE("backend name is one of the two implementations") {
  const auto name = mia::kernels::backend_name();
  CHECK((name == "avx2" || name == "scalar"));
  mia::kernels::force_scalar_backend(true);
  CHECK(mia::kernels::backend_name() == "scalar");
  mia::kernels::force_scalar_backend(false);
}

TEST_CASE("scalar and dispatched kernels agree across sizes") {
  mia::RngStream rng(42);
  for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 33u, 100u, 257u, 1024u}) {
    const auto x = random_vec(rng, n);
    const auto y = random_vec(rng, n);

    mia::kernels::force_scalar_backend(true);
    const double dot_s = mia::kernels::dot(x, y);
    const double nrm_s = mia::kernels::squared_norm(x);
    auto axpy_s = y;
    mia::kernels::axpy(0.37, x, axpy_s);
    auto scale_s = x;
    mia::kernels::scale(-1.75, scale_s);

    mia::kernels::force_scalar_backend(false);
    const double dot_d = mia::kernels::dot(x, y);
    const double nrm_d = mia::kernels::squared_norm(x);
    auto axpy_d = y;
    mia::kernels::axpy(0.37, x, axpy_d);
    auto scale_d = x;
    mia::kernels::scale(-1.75, scale_d);

    // FMA contraction differs from mul+add by at most a few ulps
    CHECK(dot_s == doctest::Approx(dot_d).epsilon(1e-13));
    CHECK(nrm_s == doctest::Approx(nrm_d).epsilon(1e-13));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(axpy_s[i] == doctest::Approx(axpy_d[i]).epsilon(1e-13));
      CHECK(scale_s[i] == scale_d[i]);
    }
  }
}

TEST_CASE("dot matches a plain accumulation loop") {
  mia::RngStream rng(7);
  const auto x = random_vec(rng, 301);
  const auto y = random_vec(rng, 301);
  double expect = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) expect += x[i] * y[i];
  CHECK(mia::kernels::dot(x, y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("matvec_rows equals per-row dot") {
  mia::RngStream rng(9);
  const std::size_t rows = 11, cols = 37;
  const auto mat = random_vec(rng, rows * cols);
  const auto v = random_vec(rng, cols);
  std::vector<double> out(rows);
  mia::kernels::matvec_rows(mat, rows, cols, v, out);
  for (std::size_t r = 0; r < rows; ++r) {
    const double expect = mia::kernels::dot(
        std::span<const double>(mat).subspan(r * cols, cols), v);
    CHECK(out[r] == expect);
  }
}

TEST_CASE("accumulate_row is axpy") {
  mia::RngStream rng(11);
  const auto row = random_vec(rng, 65);
  auto a = random_vec(rng, 65);
  auto b = a;
  mia::kernels::accumulate_row(2.5, row, a);
  mia::kernels::axpy(2.5, row, b);
  CHECK(a == b);
}

TEST_CASE("squared_norm is non-negative and exact on basis vectors") {
  std::vector<double> e(10, 0.0);
  e[3] = -2.0;
  CHECK(mia::kernels::squared_norm(e) == 4.0);
}
