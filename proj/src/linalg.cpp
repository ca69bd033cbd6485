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

#include "mia/linalg.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "mia/kernels.hpp"

namespace mia {

namespace {

unsigned worker_count() {
  if (const char* env = std::getenv("MIA_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = worker_count();
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

Matrix gram(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix g(n, n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j <= i; ++j) {
      g(i, j) = kernels::dot(a.row(i), a.row(j));
    }
  });
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) g(i, j) = g(j, i);
  }
  return g;
}

void cholesky_in_place(Matrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
  for (std::size_t j = 0; j < n; ++j) {
    auto row_j = m.row(j);
    const double diag =
        m(j, j) - kernels::dot(row_j.first(j), row_j.first(j));
    if (!(diag > 0.0)) {
      throw std::runtime_error("cholesky: non-positive pivot");
    }
    const double ljj = std::sqrt(diag);
    m(j, j) = ljj;
    const double inv = 1.0 / ljj;
    auto update = [&](std::size_t k) {
      const std::size_t i = j + 1 + k;
      m(i, j) = (m(i, j) - kernels::dot(m.row(i).first(j),
                                        m.row(j).first(j))) *
                inv;
    };
    const std::size_t remaining = n - j - 1;
    // thread dispatch only pays off while the trailing block is large
    if (remaining >= 256 && j >= 64) {
      parallel_for(remaining, update);
    } else {
      for (std::size_t k = 0; k < remaining; ++k) update(k);
    }
    // zero the upper triangle as we go
    for (std::size_t i = j + 1; i < n; ++i) m(j, i) = 0.0;
  }
}

std::vector<double> solve_lower(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    const double s = kernels::dot(l.row(i).first(i),
                                  std::span<const double>(x).first(i));
    x[i] = (x[i] - s) / l(i, i);
  }
  return x;
}

std::vector<double> solve_lower_transposed(const Matrix& l,
                                           std::span<const double> b) {
  const std::size_t n = l.rows();
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t ii = n; ii > 0; --ii) {
    const std::size_t i = ii - 1;
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) s += l(j, i) * x[j];
    x[i] = (x[i] - s) / l(i, i);
  }
  return x;
}

std::vector<double> cholesky_solve(const Matrix& l,
                                   std::span<const double> b) {
  return solve_lower_transposed(l, solve_lower(l, b));
}

std::vector<double> symmetric_matvec(const Matrix& m,
                                     std::span<const double> x) {
  std::vector<double> y(m.rows());
  kernels::matvec_rows(m.flat(), m.rows(), m.cols(), x, y);
  return y;
}

}  // namespace mia
