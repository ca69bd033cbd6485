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

#include "mia/rng.hpp"

TEST_CASE("identical seeds give identical streams") {
  mia::RngStream a(123), b(123);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different tags derive different streams") {
  auto a = mia::RngStream::derive(1, {1});
  auto b = mia::RngStream::derive(1, {2});
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) any_diff |= a.next_u64() != b.next_u64();
  CHECK(any_diff);
  CHECK(mia::mix_seed(1, 1) != mia::mix_seed(1, 2));
  CHECK(mia::mix_seed(1, 1) == mia::mix_seed(1, 1));
}

TEST_CASE("uniform stays inside the open unit interval") {
  mia::RngStream rng(9);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal draws have the right first two moments") {
  mia::RngStream rng(17);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_below respects its bound and hits every value") {
  mia::RngStream rng(23);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_below(7);
    REQUIRE(v < 7);
    counts[v]++;
  }
  for (int c : counts) CHECK(c > 0);
}

TEST_CASE("permutation is a bijection") {
  mia::RngStream rng(31);
  auto p = rng.permutation(100);
  std::sort(p.begin(), p.end());
  for (std::uint32_t i = 0; i < 100; ++i) CHECK(p[i] == i);
}
