// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>

namespace radgrid {

using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Vec3i = Eigen::Vector3i;

struct Aabb {
  Vec3 min{0, 0, 0};
  Vec3 max{0, 0, 0};

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool valid() const {
    return min.x() < max.x() && min.y() < max.y() && min.z() < max.z();
  }
  bool contains(const Aabb& inner) const {
    return (inner.min.array() >= min.array()).all() &&
           (inner.max.array() <= max.array()).all();
  }
  static Aabb cube(const Vec3& c, double half_extent) {
    return {c - Vec3::Constant(half_extent), c + Vec3::Constant(half_extent)};
  }
};

struct RayHit {
  double t_near;  // may be negative when the origin is inside the box
  double t_far;   // always >= max(t_near, 0) for a reported hit
};

// Slab intersection of a unit-direction ray with an axis-aligned box.
// A box entirely behind the origin is a miss.
inline std::optional<RayHit> intersect_aabb(const Vec3& origin, const Vec3& dir,
                                            const Aabb& box) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double d = dir[a];
    if (d == 0.0) {
      if (origin[a] < box.min[a] || origin[a] > box.max[a]) return std::nullopt;
      continue;  // parallel and inside the slab: unconstrained
    }
    const double inv = 1.0 / d;
    double ta = (box.min[a] - origin[a]) * inv;
    double tb = (box.max[a] - origin[a]) * inv;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (t1 < 0.0) return std::nullopt;
  return RayHit{t0, t1};
}

}  // namespace radgrid
