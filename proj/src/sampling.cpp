// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace radgrid {

namespace {

constexpr std::uint64_t kStreamPixelU = 0xA1;
constexpr std::uint64_t kStreamPixelV = 0xA2;
constexpr std::uint64_t kStreamPath = 0xB000000000ull;

struct Lerp1D {
  int i0;
  double f;
};

// Cell-centered coordinate with clamp-to-edge: values live at (i + 0.5).
inline Lerp1D sample_coord(double x, int n) {
  const double q = x - 0.5;
  int i0 = static_cast<int>(std::floor(q));
  double f = q - i0;
  if (i0 < 0) {
    i0 = 0;
    f = 0.0;
  } else if (i0 > n - 2) {
    i0 = n - 2;
    f = 1.0;
  }
  return {i0, f};
}

}  // namespace

std::uint64_t hash_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                 std::uint64_t c) {
  const std::uint64_t h = hash_mix(seed ^ hash_mix(a ^ hash_mix(b ^ hash_mix(c))));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::pair<double, double> pixel_jitter(const JitterSpec& jitter,
                                       std::int32_t cam, int row, int col) {
  if (!jitter.enabled) return {0.5, 0.5};
  const std::uint64_t key = pixel_key(cam, row, col);
  return {hash_unit(jitter.seed, jitter.iteration, key, kStreamPixelU),
          hash_unit(jitter.seed, jitter.iteration, key, kStreamPixelV)};
}

FaceUv cube_face_uv(const Vec3& p, const Vec3& center, double half_extent) {
  const Vec3 d = (p - center) / half_extent;
  int axis = 0;
  double m = std::abs(d.x());
  if (std::abs(d.y()) > m) {
    axis = 1;
    m = std::abs(d.y());
  }
  if (std::abs(d.z()) > m) axis = 2;
  const int face = 2 * axis + (d[axis] < 0.0 ? 1 : 0);
  const int ua = axis == 0 ? 1 : 0;           // u source axis
  const int va = axis == 2 ? 1 : 2;           // v source axis
  return {face, 0.5 * (d[ua] + 1.0), 0.5 * (d[va] + 1.0)};
}

namespace {

void grid_footprint(const Scene& scene, const Vec3& p, RaySample& s) {
  const Vec3 cell = scene.cell_size();
  const Vec3i dims = scene.dims();
  const Lerp1D lx = sample_coord((p.x() - scene.aabb().min.x()) / cell.x(), dims.x());
  const Lerp1D ly = sample_coord((p.y() - scene.aabb().min.y()) / cell.y(), dims.y());
  const Lerp1D lz = sample_coord((p.z() - scene.aabb().min.z()) / cell.z(), dims.z());
  int k = 0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? lz.f : 1.0 - lz.f;
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? ly.f : 1.0 - ly.f;
      for (int dx = 0; dx < 2; ++dx) {
        s.base[k] = static_cast<std::uint32_t>(
            scene.cell_base(lx.i0 + dx, ly.i0 + dy, lz.i0 + dz));
        s.w[k] = wz * wy * (dx ? lx.f : 1.0 - lx.f);
        ++k;
      }
    }
  }
  s.corners = 8;
}

void env_footprint(const Scene& scene, int layer, const Vec3& p, RaySample& s) {
  const EnvLayerDesc& l = scene.layers()[layer];
  const FaceUv fuv = cube_face_uv(p, scene.center(), l.half_extent);
  const Lerp1D lu = sample_coord(fuv.u * l.face_res, l.face_res);
  const Lerp1D lv = sample_coord(fuv.v * l.face_res, l.face_res);
  int k = 0;
  for (int dv = 0; dv < 2; ++dv) {
    const double wv = dv ? lv.f : 1.0 - lv.f;
    for (int du = 0; du < 2; ++du) {
      s.base[k] = static_cast<std::uint32_t>(
          scene.texel_base(layer, fuv.face, lv.i0 + dv, lu.i0 + du));
      s.w[k] = wv * (du ? lu.f : 1.0 - lu.f);
      ++k;
    }
  }
  s.corners = 4;
}

}  // namespace

void build_samples(const Scene& scene, const Ray& ray, const JitterSpec& jitter,
                   double step_len, RaySampleList& out) {
  out.clear();
  const double step = step_len > 0.0 ? step_len : scene.step_length();
  if (step <= 0.0) throw std::invalid_argument("build_samples: step must be > 0");

  const auto hit = intersect_aabb(ray.origin, ray.dir, scene.aabb());
  if (hit) {
    const double tn = std::max(hit->t_near, 0.0);
    const double tf = hit->t_far;
    const double len = tf - tn;
    const int count =
        len > 0.0 ? std::max(0, static_cast<int>(std::ceil(len / step - 0.5))) : 0;
    if (count > 0) {
      out.entry_t = tn;
      out.exit_t = tf;
      const std::uint64_t key = pixel_key(ray.cam, ray.row, ray.col);
      const double margin = 1e-9 * step;
      for (int k = 0; k < count; ++k) {
        const double eta =
            jitter.enabled
                ? hash_unit(jitter.seed, jitter.iteration, key, kStreamPath + k) - 0.5
                : 0.0;
        double t = tn + (k + 0.5 + eta) * step;
        t = std::clamp(t, tn + margin, tf - margin);
        RaySample s;
        s.t = t;
        s.delta = step;
        s.kind = 0;
        grid_footprint(scene, ray.origin + t * ray.dir, s);
        out.samples.push_back(s);
      }
      out.n_grid = count;
    }
  }

  for (int layer = 0; layer < static_cast<int>(scene.layers().size()); ++layer) {
    const auto lh = intersect_aabb(
        ray.origin, ray.dir,
        Aabb::cube(scene.center(), scene.layers()[layer].half_extent));
    if (!lh || lh->t_far <= 0.0) continue;  // camera outside, looking away
    RaySample s;
    s.t = lh->t_far;
    s.delta = 1.0;  // unit optical path per env intersection
    s.kind = 1 + layer;
    env_footprint(scene, layer, ray.origin + s.t * ray.dir, s);
    out.samples.push_back(s);
  }
}

}  // namespace radgrid
