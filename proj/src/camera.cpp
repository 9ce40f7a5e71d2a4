// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/camera.hpp"

#include <stdexcept>

namespace radgrid {

Camera::Camera(const Eigen::Matrix4d& pose_in, double focal_in, int w, int h)
    : pose(pose_in), focal(focal_in), width(w), height(h) {
  if (focal <= 0.0) throw std::invalid_argument("Camera: focal must be > 0");
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("Camera: image dimensions must be positive");
  const Eigen::Matrix3d r = rotation();
  const double dev = (r.transpose() * r - Eigen::Matrix3d::Identity())
                         .cwiseAbs()
                         .maxCoeff();
  if (dev > 1e-5)
    throw std::invalid_argument("Camera: rotation part is not orthonormal");
  Eigen::Vector4d bottom = pose.row(3);
  if ((bottom - Eigen::Vector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("Camera: pose bottom row must be (0,0,0,1)");
}

Camera Camera::downscaled() const {
  Camera c = *this;
  c.width = width / 2;
  c.height = height / 2;
  c.focal = 0.5 * focal;
  return c;
}

Ray generate_ray(const Camera& cam, int row, int col, double ju, double jv) {
  if (row < 0 || row >= cam.height || col < 0 || col >= cam.width)
    throw std::invalid_argument("generate_ray: pixel out of bounds");
  const double px = (col + ju) - 0.5 * cam.width;
  const double py = (row + jv) - 0.5 * cam.height;
  // Image rows grow downward while camera +y points up.
  const Vec3 dir_cam(px / cam.focal, -py / cam.focal, -1.0);
  Ray ray;
  ray.origin = cam.position();
  ray.dir = (cam.rotation() * dir_cam).normalized();
  ray.row = row;
  ray.col = col;
  return ray;
}

}  // namespace radgrid
