// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>

namespace radgrid::kernels {

// Flat vector kernels backing the PCG solver and the parameter update.
// One scalar reference implementation plus SIMD variants selected at
// runtime; all variants agree up to floating-point reassociation and are
// equivalence-tested against the scalar kernels.
enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = x + a * y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);
  // out = a .* b
  void (*hadamard)(const double* a, const double* b, double* out,
                   std::size_t n);
  // out[i] = float(p[i] + g * d[i]), with every 4th lane (the opacity
  // channel of an rgbs cell) clamped to >= 0. n must be a multiple of 4.
  void (*apply_step)(const float* p, const double* d, double g, float* out,
                     std::size_t n);
};

// Best backend this CPU supports (compile target permitting).
Backend best_backend();
Backend active_backend();
// Throws std::invalid_argument if the backend is not usable here.
void set_backend(Backend b);
std::string_view backend_name(Backend b);
const KernelTable& table_for(Backend b);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
void xpay(const double* x, double a, double* y, std::size_t n);
void hadamard(const double* a, const double* b, double* out, std::size_t n);
void apply_step(const float* p, const double* d, double g, float* out,
                std::size_t n);

}  // namespace radgrid::kernels
