// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "radgrid/kernels.hpp"

namespace radgrid {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ForwardConfig make_forward(const GnConfig& cfg, std::uint32_t jitter_iteration) {
  ForwardConfig f;
  f.background = cfg.background;
  f.lambda_aux = cfg.lambda_aux;
  f.step_len = 0.0;
  f.jitter = {cfg.rng_seed, jitter_iteration, cfg.jitter};
  f.deterministic = cfg.deterministic;
  return f;
}

}  // namespace

PcgResult pcg_solve(const ApplyFn& apply_A, const DVec& b, const DVec& m_diag,
                    const PcgConfig& cfg, DVec& x) {
  const std::size_t n = b.size();
  if (m_diag.size() != n)
    throw std::invalid_argument("pcg_solve: diagonal size mismatch");
  if (cfg.eps <= 0.0 || cfg.stall_ratio <= 0.0 || cfg.max_iters < 1)
    throw std::invalid_argument("pcg_solve: invalid config");
  const bool stall_enabled = cfg.stall_ratio < 1.0;

  x.assign(n, 0.0);
  DVec r = b;  // r0 = b - A x0 with x0 = 0
  double r_prev = kernels::dot(r.data(), r.data(), n);
  if (r_prev == 0.0) return {0, 0.0, PcgStatus::kZeroRhs};

  DVec minv(n);
  for (std::size_t i = 0; i < n; ++i)
    minv[i] = m_diag[i] > 0.0 ? 1.0 / m_diag[i] : 1.0;

  DVec z(n), p(n), ap(n);
  kernels::hadamard(minv.data(), r.data(), z.data(), n);
  p = z;
  double rz = kernels::dot(r.data(), z.data(), n);

  PcgResult result;
  for (int k = 0;; ++k) {
    apply_A(p, ap);
    const double pap = kernels::dot(p.data(), ap.data(), n);
    if (!std::isfinite(pap) || pap <= 0.0) {
      result.status = PcgStatus::kAborted;
      result.final_r2 = r_prev;
      return result;
    }
    const double alpha = rz / pap;
    kernels::axpy(alpha, p.data(), x.data(), n);
    kernels::axpy(-alpha, ap.data(), r.data(), n);
    const double r2 = kernels::dot(r.data(), r.data(), n);
    result.iters = k + 1;
    result.final_r2 = r2;
    if (!std::isfinite(r2)) {
      result.status = PcgStatus::kAborted;
      return result;
    }
    if (r2 < cfg.eps) {
      result.status = PcgStatus::kConverged;
      return result;
    }
    if (stall_enabled && r2 / r_prev > cfg.stall_ratio) {
      result.status = PcgStatus::kStalled;
      return result;
    }
    if (result.iters >= cfg.max_iters) {
      result.status = PcgStatus::kMaxIters;
      return result;
    }
    r_prev = r2;
    kernels::hadamard(minv.data(), r.data(), z.data(), n);
    const double rz_next = kernels::dot(r.data(), z.data(), n);
    const double beta = rz_next / rz;
    if (!std::isfinite(beta)) {
      result.status = PcgStatus::kAborted;
      return result;
    }
    kernels::xpay(z.data(), beta, p.data(), n);  // p = z + beta p
    rz = rz_next;
  }
}

BacktrackResult backtrack(const std::function<double(double)>& error_at,
                          double alpha, int cap) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("backtrack: alpha must be in (0,1)");
  if (cap < 1) throw std::invalid_argument("backtrack: cap must be >= 1");

  double gamma = 1.0;
  double prev_gamma = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  bool have_prev = false;
  for (int trials = 1;; ++trials) {
    const double mu = error_at(gamma);
    if (!std::isfinite(mu)) {
      if (have_prev) return {prev_gamma, prev, trials, false};
      if (trials >= cap)
        return {0.0, std::numeric_limits<double>::quiet_NaN(), trials, true};
      gamma *= alpha;  // overflow at large steps: keep shrinking
      continue;
    }
    if (mu > prev) return {prev_gamma, prev, trials, false};
    if (trials >= cap) return {gamma, mu, trials, false};
    prev = mu;
    prev_gamma = gamma;
    have_prev = true;
    gamma *= alpha;
  }
}

LineSearchResult line_search(const Scene& scene, const DVec& direction,
                             std::span<const Ray> rays, const GnConfig& cfg,
                             std::uint32_t jitter_iteration) {
  if (direction.size() != scene.param_count())
    throw std::invalid_argument("line_search: direction sized to scene required");
  for (double v : direction)
    if (!std::isfinite(v))
      throw std::invalid_argument("line_search: non-finite direction");

  const ForwardConfig fwd = make_forward(cfg, jitter_iteration);
  Scene trial = scene;
  const std::size_t n = scene.param_count();
  const auto error_at = [&](double gamma) {
    kernels::apply_step(scene.params().data(), direction.data(), gamma,
                        trial.params().data(), n);
    try {
      return objective(rays, trial, fwd);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::quiet_NaN();  // non-finite trial
    }
  };
  const BacktrackResult bt =
      backtrack(error_at, cfg.backtrack_alpha, cfg.backtrack_cap);
  return {bt.gamma, bt.value, bt.trials, bt.rejected};
}

IterationRecord gn_iteration(Scene& scene, std::span<const Ray> rays,
                             const GnConfig& cfg, int level, int iteration,
                             SolveWorkspace& ws) {
  const auto t0 = Clock::now();
  const std::uint32_t jit =
      static_cast<std::uint32_t>(level) * cfg.iters_per_level + iteration;
  SystemConfig sys{make_forward(cfg, jit), cfg.freeze_sigma};

  IterationRecord rec;
  rec.level = level;
  rec.iteration = iteration;

  GnBuild build;
  gn_build(rays, scene, sys, build, &ws.build_scratch);
  rec.objective = build.objective;

  const std::size_t n = scene.param_count();
  const double r0 = kernels::dot(build.rhs.data(), build.rhs.data(), n);
  if (r0 == 0.0) {  // zero residual gradient: fixed point
    rec.seconds = seconds_since(t0);
    return rec;
  }

  PcgConfig pcg;
  pcg.eps = cfg.pcg_eps_scale * r0;
  pcg.stall_ratio = cfg.pcg_stall_ratio;
  pcg.max_iters = cfg.pcg_max_iters;
  DVec delta;
  const PcgResult pr = pcg_solve(
      [&](const DVec& p, DVec& out) {
        jtj_apply(rays, scene, sys, p, out, &ws.apply_scratch);
      },
      build.rhs, build.diag, pcg, delta);
  rec.pcg_iters = pr.iters;
  if (pr.status == PcgStatus::kAborted) {
    rec.stalled = true;
    rec.seconds = seconds_since(t0);
    return rec;
  }

  // Parameters no ray touches must not move.
  for (std::size_t i = 0; i < n; ++i)
    if (build.diag[i] == 0.0) delta[i] = 0.0;
  rec.grad_dot_step = kernels::dot(build.rhs.data(), delta.data(), n);

  const LineSearchResult ls = line_search(scene, delta, rays, cfg, jit);
  if (ls.rejected || !(ls.objective <= build.objective)) {
    rec.stalled = true;  // no trial improved on the current objective
    rec.seconds = seconds_since(t0);
    return rec;
  }

  kernels::apply_step(scene.params().data(), delta.data(), ls.gamma,
                      scene.params().data(), n);
  rec.objective = ls.objective;
  rec.step_scale = ls.gamma;
  rec.seconds = seconds_since(t0);
  return rec;
}

std::vector<Ray> make_rays(const Dataset& views, const GnConfig& cfg,
                           std::uint32_t jitter_iteration) {
  const JitterSpec jitter{cfg.rng_seed, jitter_iteration, cfg.jitter};
  const std::size_t per_frame =
      static_cast<std::size_t>(views.width) * views.height;
  const std::size_t total = per_frame * views.size();

  std::vector<std::size_t> selected;
  if (cfg.subsample_rays > 0 && cfg.subsample_rays < total) {
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(hash_mix(cfg.rng_seed ^ hash_mix(jitter_iteration)));
    for (std::size_t i = 0; i < cfg.subsample_rays; ++i) {
      const std::size_t j = i + rng() % (total - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(cfg.subsample_rays);
    std::sort(idx.begin(), idx.end());
    selected = std::move(idx);
  }

  std::vector<Ray> rays;
  rays.reserve(selected.empty() ? total : selected.size());
  const auto emit = [&](std::size_t flat) {
    const int cam_i = static_cast<int>(flat / per_frame);
    const std::size_t px = flat % per_frame;
    const int row = static_cast<int>(px / views.width);
    const int col = static_cast<int>(px % views.width);
    const auto [u, v] = pixel_jitter(jitter, cam_i, row, col);
    Ray ray = generate_ray(views.cameras[cam_i], row, col, u, v);
    ray.cam = cam_i;
    const float* t = views.images[cam_i].at(row, col);
    ray.target = Vec3f(t[0], t[1], t[2]);
    rays.push_back(ray);
  };
  if (selected.empty())
    for (std::size_t f = 0; f < total; ++f) emit(f);
  else
    for (std::size_t f : selected) emit(f);
  return rays;
}

std::pair<Scene, SolveReport> solve_hierarchy(const Dataset& train,
                                              const GnConfig& cfg,
                                              const SolveHooks& hooks) {
  if (train.size() == 0)
    throw std::invalid_argument("solve_hierarchy: empty dataset");
  if (cfg.levels < 1 || cfg.iters_per_level < 0)
    throw std::invalid_argument("solve_hierarchy: invalid schedule");

  // Image pyramid: level l works on images downscaled by 2^(levels-1-l).
  std::vector<Dataset> pyramid;
  if (cfg.image_pyramid && cfg.levels > 1) {
    pyramid.resize(cfg.levels);
    pyramid[cfg.levels - 1] = train;
    for (int l = cfg.levels - 2; l >= 0; --l) {
      const Dataset& finer = pyramid[l + 1];
      pyramid[l] = (std::min(finer.width, finer.height) >= 16)
                       ? finer.downscaled()
                       : finer;
    }
  }

  LevelSpec spec{cfg.base_grid, cfg.base_face_res, cfg.env_layer_count, cfg.aabb};
  Scene scene = Scene::init_level(spec, cfg.rng_seed);
  SolveReport report;
  SolveWorkspace ws;

  for (int level = 0; level < cfg.levels; ++level) {
    const Dataset& views = pyramid.empty() ? train : pyramid[level];
    for (int iter = 0; iter < cfg.iters_per_level; ++iter) {
      const std::uint32_t jit =
          static_cast<std::uint32_t>(level) * cfg.iters_per_level + iter;
      const std::vector<Ray> rays = make_rays(views, cfg, jit);
      IterationRecord rec = gn_iteration(scene, rays, cfg, level, iter, ws);
      if (hooks.holdout_metric && hooks.holdout_mode == HoldoutMode::kPerIteration)
        rec.holdout_psnr = hooks.holdout_metric(scene);
      report.rows.push_back(rec);
      if (hooks.on_iteration) hooks.on_iteration(rec);
    }
    if (hooks.holdout_metric && hooks.holdout_mode == HoldoutMode::kPerLevel &&
        !report.rows.empty())
      report.rows.back().holdout_psnr = hooks.holdout_metric(scene);
    if (hooks.on_level_end) hooks.on_level_end(level, scene);
    if (level + 1 < cfg.levels) scene = scene.upsampled();
  }
  return {std::move(scene), std::move(report)};
}

}  // namespace radgrid
