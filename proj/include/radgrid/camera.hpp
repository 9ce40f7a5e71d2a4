// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "radgrid/geometry.hpp"

namespace radgrid {

// Pinhole camera. pose is the camera-to-world rigid transform; the camera
// looks along -z with image +x right and +y up.
struct Camera {
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  double focal = 1.0;  // pixels
  int width = 0;
  int height = 0;

  Camera() = default;
  Camera(const Eigen::Matrix4d& pose, double focal, int width, int height);

  Eigen::Matrix3d rotation() const { return pose.topLeftCorner<3, 3>(); }
  Vec3 position() const { return pose.topRightCorner<3, 1>(); }

  // Half-resolution camera for the image pyramid.
  Camera downscaled() const;
};

struct Ray {
  Vec3 origin{0, 0, 0};
  Vec3 dir{0, 0, -1};  // unit
  int row = 0, col = 0;
  std::int32_t cam = 0;  // frame index; part of the jitter counter
  Vec3f target{0, 0, 0};
};

// Ray through pixel position (col + ju, row + jv), jitter in [0,1)^2.
Ray generate_ray(const Camera& cam, int row, int col, double ju, double jv);

}  // namespace radgrid
