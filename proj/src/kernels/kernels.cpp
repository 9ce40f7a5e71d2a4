// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace radgrid::kernels {

namespace {

double scalar_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void scalar_axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scalar_xpay(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scalar_hadamard(const double* a, const double* b, double* out,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scalar_apply_step(const float* p, const double* d, double g, float* out,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    float v = static_cast<float>(static_cast<double>(p[i]) + g * d[i]);
    if ((i & 3u) == 3u) v = std::max(v, 0.0f);  // opacity channel
    out[i] = v;
  }
}

constexpr KernelTable kScalarTable{scalar_dot, scalar_axpy, scalar_xpay,
                                   scalar_hadamard, scalar_apply_step};

std::atomic<const KernelTable*> g_table{nullptr};
std::atomic<Backend> g_backend{Backend::kScalar};

}  // namespace

#if defined(__x86_64__) || defined(_M_X64)
namespace detail {
const KernelTable& avx2_table();  // kernels_avx2.cpp, built with -mavx2
}
#endif
#if defined(__aarch64__)
namespace detail {
const KernelTable& neon_table();  // kernels_neon.cpp
}
#endif

Backend best_backend() {
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) return Backend::kAvx2;
#endif
#if defined(__aarch64__)
  return Backend::kNeon;
#endif
  return Backend::kScalar;
}

const KernelTable& table_for(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::kAvx2:
      if (!__builtin_cpu_supports("avx2"))
        throw std::invalid_argument("kernels: AVX2 not supported by this CPU");
      return detail::avx2_table();
#endif
#if defined(__aarch64__)
    case Backend::kNeon:
      return detail::neon_table();
#endif
    default:
      throw std::invalid_argument("kernels: backend not available in this build");
  }
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

void set_backend(Backend b) {
  g_table.store(&table_for(b), std::memory_order_release);
  g_backend.store(b, std::memory_order_release);
}

Backend active_backend() {
  if (!g_table.load(std::memory_order_acquire)) set_backend(best_backend());
  return g_backend.load(std::memory_order_acquire);
}

namespace {
inline const KernelTable& active() {
  const KernelTable* t = g_table.load(std::memory_order_acquire);
  if (!t) {
    set_backend(best_backend());
    t = g_table.load(std::memory_order_acquire);
  }
  return *t;
}
}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}
void xpay(const double* x, double a, double* y, std::size_t n) {
  active().xpay(x, a, y, n);
}
void hadamard(const double* a, const double* b, double* out, std::size_t n) {
  active().hadamard(a, b, out, n);
}
void apply_step(const float* p, const double* d, double g, float* out,
                std::size_t n) {
  active().apply_step(p, d, g, out, n);
}

}  // namespace radgrid::kernels
