// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <string>

#include "radgrid/dataset.hpp"
#include "radgrid/derivatives.hpp"

namespace radgrid {

struct PcgConfig {
  double eps = 1e-12;        // absolute stop on R = r^T r
  double stall_ratio = 0.85; // exit early when R/R_prev exceeds this
  int max_iters = 3;
};

enum class PcgStatus { kConverged, kStalled, kMaxIters, kZeroRhs, kAborted };

struct PcgResult {
  int iters = 0;
  double final_r2 = 0.0;
  PcgStatus status = PcgStatus::kZeroRhs;
};

using ApplyFn = std::function<void(const DVec&, DVec&)>;

// Preconditioned conjugate gradient from x0 = 0. Zero diagonal entries of
// m_diag (parameters no ray touches) act as 1 in the preconditioner
// inverse; the corresponding solution entries stay 0 because their residual
// never becomes nonzero. Non-finite intermediates abort the solve.
PcgResult pcg_solve(const ApplyFn& apply_A, const DVec& b, const DVec& m_diag,
                    const PcgConfig& cfg, DVec& x);

struct BacktrackResult {
  double gamma = 0.0;
  double value = 0.0;
  int trials = 0;
  bool rejected = false;  // no finite objective at any trial
};

// Geometric backtracking: evaluates error_at(1), error_at(alpha), ... and
// returns the trial before the first increase, capped at cap trials.
BacktrackResult backtrack(const std::function<double(double)>& error_at,
                          double alpha, int cap);

struct GnConfig {
  int iters_per_level = 30;
  int levels = 5;
  Vec3i base_grid{32, 32, 32};
  int base_face_res = 32;
  int env_layer_count = 4;
  Aabb aabb{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  double lambda_aux = 0.1;
  double backtrack_alpha = 0.7;
  int backtrack_cap = 16;
  std::uint64_t rng_seed = 0;
  Vec3 background{1, 1, 1};
  bool jitter = true;
  bool deterministic = false;
  bool image_pyramid = true;
  std::size_t subsample_rays = 0;  // 0 = full batch
  bool freeze_sigma = false;       // optimize colors only
  double pcg_eps_scale = 1e-10;    // eps = scale * initial R
  double pcg_stall_ratio = 0.85;
  int pcg_max_iters = 3;
};

struct IterationRecord {
  int level = 0;
  int iteration = 0;
  double objective = 0.0;
  double step_scale = 0.0;
  int pcg_iters = 0;
  double seconds = 0.0;
  double grad_dot_step = 0.0;  // b . delta, >= 0 for a descent direction
  double holdout_psnr = std::numeric_limits<double>::quiet_NaN();
  bool stalled = false;
};

struct SolveReport {
  std::vector<IterationRecord> rows;
  std::string checkpoint_path;  // set by the caller after saving
};

struct LineSearchResult {
  double gamma = 0.0;
  double objective = 0.0;
  int trials = 0;
  bool rejected = false;
};

// Backtracking search along direction from the current scene; evaluates the
// full objective on the given rays (same jittered system as the iteration).
LineSearchResult line_search(const Scene& scene, const DVec& direction,
                             std::span<const Ray> rays, const GnConfig& cfg,
                             std::uint32_t jitter_iteration);

struct SolveWorkspace {
  AccumScratch build_scratch;
  AccumScratch apply_scratch;
};

// One Gauss-Newton iteration: rhs + Jacobi diagonal, PCG for the step,
// backtracking for the scale, projected update (sigma clamped >= 0).
// On PCG abort, or when no trial improves on the current objective, the
// scene is left unchanged and the record is marked stalled.
IterationRecord gn_iteration(Scene& scene, std::span<const Ray> rays,
                             const GnConfig& cfg, int level, int iteration,
                             SolveWorkspace& ws);

enum class HoldoutMode { kNone, kPerLevel, kPerIteration };

struct SolveHooks {
  std::function<void(const IterationRecord&)> on_iteration;
  std::function<void(int level, const Scene&)> on_level_end;
  // Optional metric (typically holdout PSNR) attached to iteration records
  // per holdout_mode.
  std::function<double(const Scene&)> holdout_metric;
  HoldoutMode holdout_mode = HoldoutMode::kNone;
};

// Full-batch rays for one view set; pixel jitter per cfg, optional random
// subset (deterministic in (seed, iteration)).
std::vector<Ray> make_rays(const Dataset& views, const GnConfig& cfg,
                           std::uint32_t jitter_iteration);

// Coarse-to-fine driver: iters_per_level Gauss-Newton iterations per level,
// resolution doubled between levels, images at a per-level working
// resolution when the pyramid is enabled.
std::pair<Scene, SolveReport> solve_hierarchy(const Dataset& train,
                                              const GnConfig& cfg,
                                              const SolveHooks& hooks = {});

}  // namespace radgrid
