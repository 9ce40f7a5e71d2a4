// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <filesystem>

#include "radgrid/dataset.hpp"
#include "radgrid/solver.hpp"

namespace radgrid::test {

// Procedural ground-truth scene: a soft-edged sphere with position-graded
// colors in a 32^3 grid, one faint inner env layer and one near-opaque
// outer layer with smooth per-face color gradients.
Scene make_gt_scene(int grid_n = 32, int face_res = 32);

// Cameras on a spiral around the scene looking at the origin.
std::vector<Camera> fixture_cameras(int count, int image_size, double fov_x,
                                    double radius);

inline constexpr double kFixtureFovX = 0.7;

// Renders `views` ground-truth images (no threshold, linear encoding) and
// writes transforms_train.json / transforms_test.json under root; every
// fifth view goes to the test split.
void write_fixture_dataset(const std::filesystem::path& root,
                           const Scene& gt_scene, int views = 40,
                           int image_size = 96);

// Reconstruction settings matched to the fixture: two levels ending at the
// ground-truth resolution, jitter off, deterministic reductions.
GnConfig fixture_config();

}  // namespace radgrid::test
