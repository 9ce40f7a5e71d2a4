// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "radgrid/camera.hpp"
#include "radgrid/image.hpp"

namespace radgrid {

struct DatasetOptions {
  Vec3 background{1, 1, 1};  // linear; alpha frames composite over this
  bool srgb = true;          // linearize 8-bit inputs before use
};

struct Dataset {
  std::vector<Camera> cameras;
  std::vector<ImageF> images;  // linear [0,1] rgb, alpha pre-composited
  std::vector<std::string> names;
  int width = 0;
  int height = 0;

  std::size_t size() const { return cameras.size(); }
  // Half-resolution copy for the image pyramid.
  Dataset downscaled() const;
};

inline double focal_from_angle_x(double camera_angle_x, int width) {
  return 0.5 * width / std::tan(0.5 * camera_angle_x);
}

// Reads root/transforms_<split>.json (camera_angle_x; frames[].file_path;
// frames[].transform_matrix as a row-major 4x4 camera-to-world) plus the
// referenced PNGs. Rotations may deviate from orthonormal by at most 1e-3
// and are re-orthonormalized.
Dataset load_dataset(const std::filesystem::path& root, const std::string& split,
                     const DatasetOptions& opts = {});

// Writer for the same convention (fixtures, round-trip tests). Images are
// encoded with the same srgb setting the loader would use.
void save_dataset(const std::filesystem::path& root, const std::string& split,
                  const Dataset& ds, double camera_angle_x,
                  const DatasetOptions& opts = {});

}  // namespace radgrid
