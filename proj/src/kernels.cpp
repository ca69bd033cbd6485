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

#include "mia/kernels.hpp"

#include <atomic>

#if defined(__x86_64__) || defined(_M_X64)
#define MIA_X86 1
#include <immintrin.h>
#if defined(_MSC_VER)
#define MIA_TARGET_AVX2
#else
// per-function codegen so the rest of the TU stays baseline x86-64
#define MIA_TARGET_AVX2 __attribute__((target("avx2,fma")))
#endif
#if defined(_MSC_VER)
#include <intrin.h>
#else
#include <cpuid.h>
#endif
#else
#define MIA_X86 0
#endif

namespace mia::kernels {

namespace detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  // Four independent accumulators; matches the reduction order of the
  // AVX2 variant so both paths agree bit-for-bit on lane-aligned sizes.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += x[i] * y[i];
    s1 += x[i + 1] * y[i + 1];
    s2 += x[i + 2] * y[i + 2];
    s3 += x[i + 3] * y[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((s0 + s2) + (s1 + s3)) + tail;
}

double squared_norm_scalar(const double* x, std::size_t n) {
  return dot_scalar(x, x, n);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

#if MIA_X86

MIA_TARGET_AVX2 double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return ((lanes[0] + lanes[2]) + (lanes[1] + lanes[3])) + tail;
}

MIA_TARGET_AVX2 double squared_norm_avx2(const double* x, std::size_t n) {
  return dot_avx2(x, x, n);
}

MIA_TARGET_AVX2 void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d yi = _mm256_loadu_pd(y + i);
    yi = _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), yi);
    _mm256_storeu_pd(y + i, yi);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

MIA_TARGET_AVX2 void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

namespace {

bool cpu_has_avx2_fma() {
#if defined(_MSC_VER)
  int info[4];
  __cpuidex(info, 7, 0);
  const bool avx2 = (info[1] & (1 << 5)) != 0;
  __cpuid(info, 1);
  const bool fma = (info[2] & (1 << 12)) != 0;
  return avx2 && fma;
#else
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  const bool avx2 = (ebx & (1u << 5)) != 0;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  const bool fma = (ecx & (1u << 12)) != 0;
  return avx2 && fma;
#endif
}

}  // namespace

#endif  // MIA_X86

}  // namespace detail

namespace {

#if MIA_X86
const bool g_has_avx2 = detail::cpu_has_avx2_fma();
#else
const bool g_has_avx2 = false;
#endif

std::atomic<bool> g_force_scalar{false};

inline bool use_avx2() {
  return g_has_avx2 && !g_force_scalar.load(std::memory_order_relaxed);
}

}  // namespace

std::string_view backend_name() { return use_avx2() ? "avx2" : "scalar"; }

void force_scalar_backend(bool on) {
  g_force_scalar.store(on, std::memory_order_relaxed);
}

double dot(std::span<const double> x, std::span<const double> y) {
#if MIA_X86
  if (use_avx2()) return detail::dot_avx2(x.data(), y.data(), x.size());
#endif
  return detail::dot_scalar(x.data(), y.data(), x.size());
}

double squared_norm(std::span<const double> x) {
#if MIA_X86
  if (use_avx2()) return detail::squared_norm_avx2(x.data(), x.size());
#endif
  return detail::squared_norm_scalar(x.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
#if MIA_X86
  if (use_avx2()) {
    detail::axpy_avx2(alpha, x.data(), y.data(), x.size());
    return;
  }
#endif
  detail::axpy_scalar(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
#if MIA_X86
  if (use_avx2()) {
    detail::scale_avx2(alpha, x.data(), x.size());
    return;
  }
#endif
  detail::scale_scalar(alpha, x.data(), x.size());
}

void matvec_rows(std::span<const double> mat, std::size_t rows,
                 std::size_t cols, std::span<const double> v,
                 std::span<double> out) {
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = dot(mat.subspan(r * cols, cols), v);
  }
}

void accumulate_row(double alpha, std::span<const double> row,
                    std::span<double> out) {
  axpy(alpha, row, out);
}

}  // namespace mia::kernels
