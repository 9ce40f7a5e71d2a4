// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <filesystem>

#include "radgrid/dataset.hpp"
#include "radgrid/solver.hpp"

namespace radgrid {

// Reconstruction settings as read from the JSON config file. background is
// kept in the display domain; linear values for compositing come from
// linear_background().
struct AppConfig {
  GnConfig gn;
  Vec3 background{1, 1, 1};
  bool srgb = true;
  HoldoutMode holdout_mode = HoldoutMode::kNone;

  Vec3 linear_background() const;
  DatasetOptions dataset_options() const;
  // gn with the linearized background filled in.
  GnConfig solver_config() const;

  static AppConfig load(const std::filesystem::path& path);
  static AppConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

}  // namespace radgrid
