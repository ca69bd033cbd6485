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

#ifndef MIA_LINALG_HPP
#define MIA_LINALG_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mia {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Runs fn(i) for i in [0, n) across worker threads. Partitioning is
// static so results are identical for any thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// G = A * A^T (n x n), computed in parallel. Both triangles filled.
Matrix gram(const Matrix& a);

// In-place lower Cholesky factorization of a symmetric positive
// definite matrix. Throws std::runtime_error on a non-positive pivot.
void cholesky_in_place(Matrix& m);

// Solves L * L^T * x = b given the lower Cholesky factor.
std::vector<double> cholesky_solve(const Matrix& l,
                                   std::span<const double> b);

// Forward substitution: solves L * x = b.
std::vector<double> solve_lower(const Matrix& l, std::span<const double> b);

// Back substitution: solves L^T * x = b.
std::vector<double> solve_lower_transposed(const Matrix& l,
                                           std::span<const double> b);

// y = M * x for a square symmetric matrix stored fully.
std::vector<double> symmetric_matvec(const Matrix& m,
                                     std::span<const double> x);

}  // namespace mia

#endif  // MIA_LINALG_HPP
