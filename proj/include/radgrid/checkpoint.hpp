// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <filesystem>

#include "radgrid/scene.hpp"

namespace radgrid {

// Scene checkpoint: magic "PERF", u32 version, header (grid dims, aabb,
// env layer descriptors), then the ParamVector as little-endian f32 in
// layout order. load(save(s)) is bit-exact.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  Vec3i dims{0, 0, 0};
  Aabb aabb;
  std::vector<EnvLayerDesc> layers;

  std::size_t param_count() const;
};

void save_checkpoint(const Scene& scene, const std::filesystem::path& path);
Scene load_checkpoint(const std::filesystem::path& path);
// Header only; does not read the payload.
CheckpointHeader inspect_checkpoint(const std::filesystem::path& path);

}  // namespace radgrid
