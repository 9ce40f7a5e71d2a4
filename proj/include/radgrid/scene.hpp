// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "radgrid/geometry.hpp"

namespace radgrid {

// Channel order of one cell/texel: r, g, b, sigma.
inline constexpr int kChannels = 4;
inline constexpr int kSigmaChannel = 3;
inline constexpr int kEnvFaces = 6;  // +x, -x, +y, -y, +z, -z

// Flat parameter storage. Grid cells come first (x fastest, then y, then z),
// four contiguous channels per cell; then env layers innermost-out, faces in
// the fixed order above, texels row-major (v, then u), four channels per
// texel. This layout is the checkpoint payload order.
using ParamVec = std::vector<float>;
// Solver-side vectors (gradients, PCG temporaries) share the same indexing
// but live in double.
using DVec = std::vector<double>;

struct EnvLayerDesc {
  int face_res = 0;
  double half_extent = 0.0;
};

struct ParamSlot {
  enum class Kind { kGrid, kEnv };
  Kind kind = Kind::kGrid;
  // grid
  int x = 0, y = 0, z = 0;
  // env
  int layer = 0, face = 0, row = 0, col = 0;
  int channel = 0;
};

struct LevelSpec {
  Vec3i grid_dims{32, 32, 32};
  int env_face_res = 32;
  int env_layer_count = 4;
  Aabb aabb{Vec3(-1, -1, -1), Vec3(1, 1, 1)};
};

class Scene {
 public:
  // Random colors in [0,1), sigma = kInitialSigma everywhere, env layers on
  // the quadratic radius schedule. Deterministic for a fixed seed.
  static Scene init_level(const LevelSpec& spec, std::uint64_t rng_seed);
  // Construction from explicit geometry with zeroed parameters (io path).
  Scene(Vec3i dims, const Aabb& aabb, std::vector<EnvLayerDesc> layers);

  static constexpr float kInitialSigma = 0.05f;

  const Vec3i& dims() const { return dims_; }
  const Aabb& aabb() const { return aabb_; }
  Vec3 center() const { return aabb_.center(); }
  const std::vector<EnvLayerDesc>& layers() const { return layers_; }

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z();
  }
  std::size_t param_count() const { return params_.size(); }
  std::size_t grid_param_count() const { return kChannels * cell_count(); }

  ParamVec& params() { return params_; }
  const ParamVec& params() const { return params_; }

  Vec3 cell_size() const {
    const Vec3 e = aabb_.extent();
    return {e.x() / dims_.x(), e.y() / dims_.y(), e.z() / dims_.z()};
  }
  // Shortest side of a voxel cell; the ray-march step length.
  double step_length() const { return cell_size().minCoeff(); }

  // Parameter index of channel 0 of a grid cell / env texel.
  std::size_t cell_base(int x, int y, int z) const {
    return kChannels *
           (static_cast<std::size_t>(x) +
            static_cast<std::size_t>(dims_.x()) *
                (static_cast<std::size_t>(y) +
                 static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(z)));
  }
  std::size_t layer_offset(int layer) const { return layer_offsets_[layer]; }
  std::size_t texel_base(int layer, int face, int row, int col) const {
    const int s = layers_[layer].face_res;
    return layer_offsets_[layer] +
           kChannels * (static_cast<std::size_t>(face) * s * s +
                        static_cast<std::size_t>(row) * s +
                        static_cast<std::size_t>(col));
  }

  // Bijective slot <-> flat index map; throws std::invalid_argument on
  // out-of-range slots or indices.
  std::size_t param_index(const ParamSlot& slot) const;
  ParamSlot slot_of(std::size_t index) const;

  // Doubled resolution in every dimension (grid dims and env face size),
  // values prolonged by cell-centered tri-/bilinear interpolation with
  // linear extrapolation in the boundary ring. aabb and layer extents are
  // unchanged; sigma stays >= 0.
  Scene upsampled() const;

  // Clamps every sigma channel to >= 0 (the projection applied after
  // solver updates).
  void clamp_sigma();
  float min_sigma() const;

 private:
  Vec3i dims_;
  Aabb aabb_;
  std::vector<EnvLayerDesc> layers_;
  std::vector<std::size_t> layer_offsets_;
  ParamVec params_;
};

// Env layer radius schedule: half_extent_k = H * (1+k)^2 for k = 1..count,
// with H half of the longest grid side.
std::vector<EnvLayerDesc> env_layer_schedule(const Aabb& aabb, int face_res,
                                             int count);

}  // namespace radgrid
