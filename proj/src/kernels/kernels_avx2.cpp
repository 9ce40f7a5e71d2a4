// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

// AVX2 variants of the flat vector kernels. This translation unit is the
// only one compiled with -mavx2; it is reached through the runtime
// dispatch table after a cpuid check.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cstddef>

#include "radgrid/kernels.hpp"

namespace radgrid::kernels::detail {

namespace {

double avx2_dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  acc0 = _mm256_add_pd(acc0, acc1);
  __m128d lo = _mm256_castpd256_pd128(acc0);
  __m128d hi = _mm256_extractf128_pd(acc0, 1);
  lo = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void avx2_axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void avx2_xpay(const double* x, double a, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, vy, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] = x[i] + a * y[i];
}

void avx2_hadamard(const double* a, const double* b, double* out,
                   std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void avx2_apply_step(const float* p, const double* d, double g, float* out,
                     std::size_t n) {
  const __m256d vg = _mm256_set1_pd(g);
  // A 4-lane block is exactly one rgbs cell; lane 3 is the opacity channel.
  const __m128 lane3 = _mm_castsi128_ps(_mm_set_epi32(-1, 0, 0, 0));
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vp = _mm256_cvtps_pd(_mm_loadu_ps(p + i));
    __m256d vr = _mm256_fmadd_pd(vg, _mm256_loadu_pd(d + i), vp);
    __m128 v = _mm256_cvtpd_ps(vr);
    __m128 clamped = _mm_max_ps(v, _mm_setzero_ps());
    _mm_storeu_ps(out + i, _mm_blendv_ps(v, clamped, lane3));
  }
  for (; i < n; ++i) {
    float v = static_cast<float>(static_cast<double>(p[i]) + g * d[i]);
    if ((i & 3u) == 3u) v = std::max(v, 0.0f);
    out[i] = v;
  }
}

constexpr KernelTable kAvx2Table{avx2_dot, avx2_axpy, avx2_xpay,
                                 avx2_hadamard, avx2_apply_step};

}  // namespace

const KernelTable& avx2_table() { return kAvx2Table; }

}  // namespace radgrid::kernels::detail

#endif  // x86_64
