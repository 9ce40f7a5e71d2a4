// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "radgrid/thread_pool.hpp"

namespace radgrid {

void RayEval::reset(std::size_t count) {
  sigma.assign(count, 0.0);
  expneg.assign(count, 1.0);
  alpha.assign(count, 0.0);
  t_prefix.assign(count, 1.0);
  color.assign(count, Vec3::Zero());
  accum.setZero();
  t_final = 1.0;
  t_grid = 1.0;
  n = static_cast<int>(count);
}

void forward_eval(const RaySampleList& samples, const Scene& scene,
                  RayEval& eval) {
  eval.reset(samples.samples.size());
  const float* params = scene.params().data();
  double t = 1.0;
  Vec3 accum = Vec3::Zero();
  double t_grid = 1.0;
  for (int i = 0; i < eval.n; ++i) {
    const RaySample& s = samples.samples[i];
    const double sg = gather(params, s, kSigmaChannel);
    const Vec3 c(gather(params, s, 0), gather(params, s, 1), gather(params, s, 2));
    const double en = std::exp(-sg * s.delta);
    const double a = 1.0 - en;
    eval.sigma[i] = sg;
    eval.expneg[i] = en;
    eval.alpha[i] = a;
    eval.t_prefix[i] = t;
    eval.color[i] = c;
    accum += (t * a) * c;
    t *= en;
    if (s.kind == 0) t_grid = t;
  }
  eval.accum = accum;
  eval.t_final = t;
  eval.t_grid = t_grid;
  if (!std::isfinite(accum.sum()) || !std::isfinite(t))
    throw std::runtime_error("forward_eval: non-finite radiance");
}

RayRadiance accumulate(const RaySampleList& samples, const Scene& scene,
                       const Vec3& background) {
  RayEval eval;
  forward_eval(samples, scene, eval);
  return {eval.accum + eval.t_final * background, eval.t_final, eval.t_grid};
}

double aux_residual(double transmittance, double lambda) {
  const double d = transmittance - 0.5;
  return lambda * (-4.0 * d * d + 1.0);
}

PixelResiduals ray_residuals(const Ray& ray, const RaySampleList& samples,
                             const Scene& scene, const ForwardConfig& cfg,
                             RayEval& eval) {
  try {
    forward_eval(samples, scene, eval);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(e.what()) + " at pixel (" +
                             std::to_string(ray.row) + "," +
                             std::to_string(ray.col) + ") frame " +
                             std::to_string(ray.cam));
  }
  const Vec3 color = eval.accum + eval.t_final * cfg.background;
  PixelResiduals r;
  for (int ch = 0; ch < 3; ++ch)
    r.color[ch] = color[ch] - static_cast<double>(ray.target[ch]);
  r.aux = aux_residual(eval.t_grid, cfg.lambda_aux);
  r.lambda = cfg.lambda_aux;
  return r;
}

PixelResiduals ray_residuals(const Ray& ray, const Scene& scene,
                             const ForwardConfig& cfg) {
  RaySampleList samples;
  RayEval eval;
  build_samples(scene, ray, cfg.jitter, cfg.step_len, samples);
  return ray_residuals(ray, samples, scene, cfg, eval);
}

double objective(std::span<const Ray> rays, const Scene& scene,
                 const ForwardConfig& cfg) {
  if (rays.empty()) throw std::invalid_argument("objective: empty ray set");

  const int n = static_cast<int>(rays.size());
  std::vector<double> contrib(n);
  constexpr int kChunk = 1024;
  const int n_chunks = (n + kChunk - 1) / kChunk;
  ThreadPool& pool = ThreadPool::global();
  std::vector<RaySampleList> sample_scratch(pool.size());
  std::vector<RayEval> eval_scratch(pool.size());
  pool.run_chunks(n_chunks, [&](int chunk, int worker) {
    RaySampleList& samples = sample_scratch[worker];
    RayEval& eval = eval_scratch[worker];
    const int lo = chunk * kChunk;
    const int hi = std::min(n, lo + kChunk);
    for (int i = lo; i < hi; ++i) {
      build_samples(scene, rays[i], cfg.jitter, cfg.step_len, samples);
      contrib[i] = ray_residuals(rays[i], samples, scene, cfg, eval).sum_sq();
    }
  });

  if (cfg.deterministic) std::sort(contrib.begin(), contrib.end());
  double sum = 0.0;
  for (double c : contrib) sum += c;
  return 0.5 * sum;
}

}  // namespace radgrid
