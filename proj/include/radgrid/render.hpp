// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <optional>

#include "radgrid/forward.hpp"
#include "radgrid/image.hpp"

namespace radgrid {

// Rays whose grid-only opacity (1 - T_grid) stays below this are treated as
// fully transparent inside the grid when thresholded rendering is on; the
// same predicate defines the foreground mask.
inline constexpr double kOpacityThreshold = 0.7;

struct RenderOptions {
  bool threshold = true;
  Vec3 background{1, 1, 1};
};

// Deterministic march (pixel centers, no jitter, step = shortest voxel
// side), env layers composited in order, then the background; output
// clamped to [0,1] linear.
ImageF render_view(const Scene& scene, const Camera& cam,
                   const RenderOptions& opts = {});

// One byte per pixel, 1 where grid opacity >= kOpacityThreshold.
std::vector<std::uint8_t> foreground_mask(const Scene& scene, const Camera& cam);

// 10 log10(1 / MSE) over the unmasked pixels, all channels pooled; +inf for
// identical images. Throws std::invalid_argument when the mask excludes
// every pixel or dimensions differ.
double psnr(const ImageF& a, const ImageF& b,
            const std::vector<std::uint8_t>* mask = nullptr);

}  // namespace radgrid
