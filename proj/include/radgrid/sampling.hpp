// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radgrid/camera.hpp"
#include "radgrid/scene.hpp"

namespace radgrid {

// Counter-based jitter: every random number is a pure hash of
// (seed, iteration, pixel, stream), so sample positions are independent of
// execution order and reproducible across runs.
struct JitterSpec {
  std::uint64_t seed = 0;
  std::uint32_t iteration = 0;
  bool enabled = false;
};

std::uint64_t hash_mix(std::uint64_t x);
// Uniform in [0,1).
double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                 std::uint64_t c);

inline std::uint64_t pixel_key(std::int32_t cam, int row, int col) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(cam)) << 40) ^
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 20) ^
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(col));
}

// Sub-pixel ray origin jitter (u, v) in [0,1)^2; (0.5, 0.5) when disabled.
std::pair<double, double> pixel_jitter(const JitterSpec& jitter,
                                       std::int32_t cam, int row, int col);

// One quadrature point along a ray: its interpolation footprint (parameter
// base slots of the touched cells/texels plus weights), step length and
// position. kind 0 is a grid sample, kind 1+k a sample on env layer k.
struct RaySample {
  std::uint32_t base[8];
  double w[8];
  double t = 0.0;
  double delta = 0.0;
  int corners = 0;
  int kind = 0;
};

struct RaySampleList {
  std::vector<RaySample> samples;  // grid samples first, then env layers in order
  int n_grid = 0;
  double entry_t = 0.0, exit_t = 0.0;  // grid intersection range (0,0 on miss)

  void clear() {
    samples.clear();
    n_grid = 0;
    entry_t = exit_t = 0.0;
  }
};

// Footprint-weighted read of one channel.
inline double gather(const float* params, const RaySample& s, int channel) {
  double acc = 0.0;
  for (int i = 0; i < s.corners; ++i)
    acc += s.w[i] * params[s.base[i] + channel];
  return acc;
}

// Marches the grid with jittered uniform steps of length step_len
// (jittered within half a step around the uniform positions, clipped to the
// intersection range), then appends one intersection sample per env layer,
// innermost first. step_len <= 0 selects the shortest voxel side.
void build_samples(const Scene& scene, const Ray& ray, const JitterSpec& jitter,
                   double step_len, RaySampleList& out);

// Cube-face mapping used by the env layers (documented convention, no
// cross-face filtering): faces ordered +x,-x,+y,-y,+z,-z; on ±x faces
// (u,v) map y,z; on ±y faces x,z; on ±z faces x,y, each as (coord/h+1)/2.
struct FaceUv {
  int face;
  double u, v;
};
FaceUv cube_face_uv(const Vec3& p, const Vec3& center, double half_extent);

}  // namespace radgrid
