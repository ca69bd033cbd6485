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

#ifndef MIA_KERNELS_HPP
#define MIA_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops used by the trainers and estimators.
// Every kernel has a scalar reference implementation and, on x86-64,
// an AVX2+FMA variant. The active variant is chosen once at load time
// from CPUID; mia::kernels::backend_name() reports which one is live.
// Scalar and SIMD variants are equivalence-tested against each other.

namespace mia::kernels {

// Name of the dispatched backend: "avx2" or "scalar".
std::string_view backend_name();

// Force the scalar reference path (used by equivalence tests). Not
// thread-safe with concurrent kernel calls; call before spawning work.
void force_scalar_backend(bool on);

// sum_i x[i] * y[i]
double dot(std::span<const double> x, std::span<const double> y);

// sum_i x[i]^2
double squared_norm(std::span<const double> x);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// x *= alpha
void scale(double alpha, std::span<double> x);

// out[r] = dot(mat[r*cols .. r*cols+cols), v) for r in [0, rows)
void matvec_rows(std::span<const double> mat, std::size_t rows,
                 std::size_t cols, std::span<const double> v,
                 std::span<double> out);

// out += alpha * row  (identical to axpy; kept as the named use-site
// for accumulating A^T * coeff one row at a time)
void accumulate_row(double alpha, std::span<const double> row,
                    std::span<double> out);

namespace detail {
double dot_scalar(const double* x, const double* y, std::size_t n);
double squared_norm_scalar(const double* x, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void scale_scalar(double alpha, double* x, std::size_t n);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* x, const double* y, std::size_t n);
double squared_norm_avx2(const double* x, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void scale_avx2(double alpha, double* x, std::size_t n);
#endif
}  // namespace detail

}  // namespace mia::kernels

#endif  // MIA_KERNELS_HPP
