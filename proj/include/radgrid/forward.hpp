// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "radgrid/sampling.hpp"

namespace radgrid {

struct ForwardConfig {
  Vec3 background{1.0, 1.0, 1.0};  // linear, composited after the last layer
  double lambda_aux = 0.1;
  double step_len = 0.0;  // <= 0 selects the shortest voxel side
  JitterSpec jitter;
  bool deterministic = false;
};

// Per-sample intermediates of one ray march, kept so the backward sweep can
// reuse them instead of re-gathering.
struct RayEval {
  std::vector<double> sigma;      // interpolated opacity
  std::vector<double> expneg;     // e^{-sigma_i delta_i}
  std::vector<double> alpha;      // 1 - e^{-sigma_i delta_i}
  std::vector<double> t_prefix;   // transmittance before sample i
  std::vector<Vec3> color;        // interpolated color
  Vec3 accum{0, 0, 0};            // radiance from the samples (no background)
  double t_final = 1.0;           // transmittance after the last sample
  double t_grid = 1.0;            // transmittance after the grid samples only
  int n = 0;

  void reset(std::size_t count);
};

// Gathers and marches the sample list (Eq. 3/4 discretization); no
// background term. Throws on non-finite parameter reads.
void forward_eval(const RaySampleList& samples, const Scene& scene, RayEval& eval);

struct RayRadiance {
  Vec3 color{0, 0, 0};         // accumulated radiance incl. background
  double transmittance = 1.0;  // after the last sample
  double grid_transmittance = 1.0;
};

RayRadiance accumulate(const RaySampleList& samples, const Scene& scene,
                       const Vec3& background);

// Opacity regularizer: lambda * (-4 (T - 0.5)^2 + 1). Zero at T = 0 and
// T = 1, maximal (= lambda) at T = 0.5. Uses the grid-only transmittance.
double aux_residual(double transmittance, double lambda);

struct PixelResiduals {
  double color[3] = {0, 0, 0};  // accumulated - target
  double aux = 0.0;
  double lambda = 0.0;

  double sum_sq() const {
    return color[0] * color[0] + color[1] * color[1] + color[2] * color[2] +
           aux * aux;
  }
};

PixelResiduals ray_residuals(const Ray& ray, const Scene& scene,
                             const ForwardConfig& cfg);
// Variant over a prebuilt sample list; eval is scratch.
PixelResiduals ray_residuals(const Ray& ray, const RaySampleList& samples,
                             const Scene& scene, const ForwardConfig& cfg,
                             RayEval& eval);

// 0.5 * sum of squared residuals (three color + one auxiliary per ray),
// ray-parallel. In deterministic mode the per-ray contributions are summed
// in sorted order, so the result does not depend on ray order at all.
double objective(std::span<const Ray> rays, const Scene& scene,
                 const ForwardConfig& cfg);

}  // namespace radgrid
