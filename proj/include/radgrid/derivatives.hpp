// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <span>

#include "radgrid/forward.hpp"

namespace radgrid {

// Per-sample partial derivatives of the accumulated radiance, produced by
// one backward sweep with two auxiliary variables (the running optical
// depth V and the suffix radiance G).
struct SamplePartials {
  std::vector<double> d_color;  // dH/dc_i; identical for all three channels
  std::vector<Vec3> d_sigma;    // dH_ch/dsigma_i per channel
  std::vector<double> d_tgrid;  // dT_grid/dsigma_i (grid samples; 0 for env)
  int n = 0;

  void reset(std::size_t count);
};

// Backward sweep over the sample list. eval must hold the forward
// intermediates for the same list.
void backward_partials(const RaySampleList& samples, const RayEval& eval,
                       SamplePartials& out);
// Convenience variant running the forward gather internally.
void backward_partials(const RaySampleList& samples, const Scene& scene,
                       SamplePartials& out);

// Chain-rule factor dL/dT of the auxiliary residual at transmittance t:
// lambda * (-8 (t - 0.5)).
inline double aux_chain(double transmittance, double lambda) {
  return -8.0 * lambda * (transmittance - 0.5);
}

// Chain rule through the interpolation footprints: for sample i and each
// footprint entry (slot_base, w), out[slot_base + channel] +=
// weight * w * per_sample[i]. per_sample must have one entry per sample.
void scatter(std::span<const double> per_sample, const RaySampleList& samples,
             int channel, double weight, DVec& out);

struct SystemConfig {
  ForwardConfig fwd;
  // Restrict the unknowns to the color channels (sigma frozen).
  bool color_only = false;
};

// Reusable per-worker buffers for the ray-parallel accumulation passes.
struct AccumScratch {
  std::vector<DVec> per_worker;
};

// b = -J^T r over all residuals (three color + one auxiliary per ray).
void gn_rhs(std::span<const Ray> rays, const Scene& scene,
            const SystemConfig& cfg, DVec& b, AccumScratch* scratch = nullptr);

// diag(J^T J): per parameter the sum of squared residual partials.
void jacobi_diagonal(std::span<const Ray> rays, const Scene& scene,
                     const SystemConfig& cfg, DVec& diag,
                     AccumScratch* scratch = nullptr);

// Matrix-free normal-equations product: out = sum_i grad r_i (grad r_i . p),
// never materializing J.
void jtj_apply(std::span<const Ray> rays, const Scene& scene,
               const SystemConfig& cfg, const DVec& p, DVec& out,
               AccumScratch* scratch = nullptr);

// Fused pass computing the objective, rhs and Jacobi diagonal together
// (one forward + one backward sweep per ray).
struct GnBuild {
  double objective = 0.0;
  DVec rhs;
  DVec diag;
};
void gn_build(std::span<const Ray> rays, const Scene& scene,
              const SystemConfig& cfg, GnBuild& out,
              AccumScratch* scratch = nullptr);

}  // namespace radgrid
