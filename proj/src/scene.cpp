// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/scene.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

namespace radgrid {

namespace {

// 64-bit state -> uniform double in [0,1). Keeps init_level reproducible
// across standard library implementations.
inline double unit_double(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

struct Lerp1D {
  int i0;
  double f;  // may fall outside [0,1] in the boundary ring (extrapolation)
};

// Cell-centered prolongation coordinate for a 2x refinement: fine index j
// samples the coarse field at j/2 - 0.25 (in coarse cell units).
inline Lerp1D prolong_coord(int fine, int coarse_n) {
  const double q = 0.5 * fine - 0.25;
  int i0 = static_cast<int>(std::floor(q));
  i0 = std::clamp(i0, 0, coarse_n - 2);
  return {i0, q - i0};
}

}  // namespace

std::vector<EnvLayerDesc> env_layer_schedule(const Aabb& aabb, int face_res,
                                             int count) {
  const double h = 0.5 * aabb.extent().maxCoeff();
  std::vector<EnvLayerDesc> layers;
  layers.reserve(count);
  for (int k = 1; k <= count; ++k)
    layers.push_back({face_res, h * (1 + k) * (1 + k)});
  return layers;
}

Scene::Scene(Vec3i dims, const Aabb& aabb, std::vector<EnvLayerDesc> layers)
    : dims_(dims), aabb_(aabb), layers_(std::move(layers)) {
  if (dims_.x() < 2 || dims_.y() < 2 || dims_.z() < 2)
    throw std::invalid_argument("Scene: grid dims must be >= 2 per axis");
  if (!aabb_.valid())
    throw std::invalid_argument("Scene: aabb.min must be < aabb.max");
  const double grid_half = 0.5 * aabb_.extent().maxCoeff();
  double prev = grid_half;
  for (const auto& l : layers_) {
    if (l.face_res < 2)
      throw std::invalid_argument("Scene: env face_res must be >= 2");
    if (l.half_extent <= prev)
      throw std::invalid_argument(
          "Scene: env layer half-extents must be strictly increasing and "
          "enclose the grid");
    prev = l.half_extent;
  }

  layer_offsets_.reserve(layers_.size());
  std::size_t off = grid_param_count();
  for (const auto& l : layers_) {
    layer_offsets_.push_back(off);
    off += static_cast<std::size_t>(kChannels) * kEnvFaces * l.face_res * l.face_res;
  }
  params_.assign(off, 0.0f);
}

Scene Scene::init_level(const LevelSpec& spec, std::uint64_t rng_seed) {
  if (spec.grid_dims.minCoeff() <= 0)
    throw std::invalid_argument("init_level: grid dims must be positive");
  if (spec.env_layer_count < 0)
    throw std::invalid_argument("init_level: env_layer_count must be >= 0");
  if (spec.env_layer_count > 0 && spec.env_face_res <= 0)
    throw std::invalid_argument("init_level: env_face_res must be positive");

  Scene s(spec.grid_dims, spec.aabb,
          env_layer_schedule(spec.aabb, spec.env_face_res, spec.env_layer_count));
  std::mt19937_64 rng(rng_seed);
  float* p = s.params_.data();
  const std::size_t cells = s.params_.size() / kChannels;
  for (std::size_t c = 0; c < cells; ++c) {
    p[0] = static_cast<float>(unit_double(rng()));
    p[1] = static_cast<float>(unit_double(rng()));
    p[2] = static_cast<float>(unit_double(rng()));
    p[3] = kInitialSigma;
    p += kChannels;
  }
  return s;
}

std::size_t Scene::param_index(const ParamSlot& slot) const {
  if (slot.channel < 0 || slot.channel >= kChannels)
    throw std::invalid_argument("param_index: channel out of range");
  if (slot.kind == ParamSlot::Kind::kGrid) {
    if (slot.x < 0 || slot.x >= dims_.x() || slot.y < 0 || slot.y >= dims_.y() ||
        slot.z < 0 || slot.z >= dims_.z())
      throw std::invalid_argument("param_index: grid cell out of range");
    return cell_base(slot.x, slot.y, slot.z) + slot.channel;
  }
  if (slot.layer < 0 || slot.layer >= static_cast<int>(layers_.size()))
    throw std::invalid_argument("param_index: env layer out of range");
  const int s = layers_[slot.layer].face_res;
  if (slot.face < 0 || slot.face >= kEnvFaces || slot.row < 0 || slot.row >= s ||
      slot.col < 0 || slot.col >= s)
    throw std::invalid_argument("param_index: env texel out of range");
  return texel_base(slot.layer, slot.face, slot.row, slot.col) + slot.channel;
}

ParamSlot Scene::slot_of(std::size_t index) const {
  if (index >= params_.size())
    throw std::invalid_argument("slot_of: index out of range");
  ParamSlot slot;
  slot.channel = static_cast<int>(index % kChannels);
  if (index < grid_param_count()) {
    std::size_t cell = index / kChannels;
    slot.kind = ParamSlot::Kind::kGrid;
    slot.x = static_cast<int>(cell % dims_.x());
    cell /= dims_.x();
    slot.y = static_cast<int>(cell % dims_.y());
    slot.z = static_cast<int>(cell / dims_.y());
    return slot;
  }
  slot.kind = ParamSlot::Kind::kEnv;
  int layer = static_cast<int>(layers_.size()) - 1;
  while (layer > 0 && index < layer_offsets_[layer]) --layer;
  slot.layer = layer;
  const int s = layers_[layer].face_res;
  std::size_t texel = (index - layer_offsets_[layer]) / kChannels;
  slot.face = static_cast<int>(texel / (static_cast<std::size_t>(s) * s));
  texel %= static_cast<std::size_t>(s) * s;
  slot.row = static_cast<int>(texel / s);
  slot.col = static_cast<int>(texel % s);
  return slot;
}

Scene Scene::upsampled() const {
  std::vector<EnvLayerDesc> fine_layers = layers_;
  for (auto& l : fine_layers) l.face_res *= 2;
  Scene fine(2 * dims_, aabb_, std::move(fine_layers));

  const int cx = dims_.x(), cy = dims_.y(), cz = dims_.z();
  const int fx_n = fine.dims_.x(), fy_n = fine.dims_.y(), fz_n = fine.dims_.z();
  for (int fz = 0; fz < fz_n; ++fz) {
    const Lerp1D lz = prolong_coord(fz, cz);
    for (int fy = 0; fy < fy_n; ++fy) {
      const Lerp1D ly = prolong_coord(fy, cy);
      for (int fx = 0; fx < fx_n; ++fx) {
        const Lerp1D lx = prolong_coord(fx, cx);
        double acc[kChannels] = {0, 0, 0, 0};
        for (int dz = 0; dz < 2; ++dz) {
          const double wz = dz ? lz.f : 1.0 - lz.f;
          for (int dy = 0; dy < 2; ++dy) {
            const double wy = dy ? ly.f : 1.0 - ly.f;
            for (int dx = 0; dx < 2; ++dx) {
              const double w = wz * wy * (dx ? lx.f : 1.0 - lx.f);
              const float* src =
                  params_.data() + cell_base(lx.i0 + dx, ly.i0 + dy, lz.i0 + dz);
              for (int ch = 0; ch < kChannels; ++ch) acc[ch] += w * src[ch];
            }
          }
        }
        float* dst = fine.params_.data() + fine.cell_base(fx, fy, fz);
        for (int ch = 0; ch < kChannels; ++ch)
          dst[ch] = static_cast<float>(acc[ch]);
      }
    }
  }

  for (std::size_t layer = 0; layer < layers_.size(); ++layer) {
    const int cs = layers_[layer].face_res;
    const int fs = 2 * cs;
    for (int face = 0; face < kEnvFaces; ++face) {
      for (int fr = 0; fr < fs; ++fr) {
        const Lerp1D lr = prolong_coord(fr, cs);
        for (int fc = 0; fc < fs; ++fc) {
          const Lerp1D lc = prolong_coord(fc, cs);
          double acc[kChannels] = {0, 0, 0, 0};
          for (int dr = 0; dr < 2; ++dr) {
            const double wr = dr ? lr.f : 1.0 - lr.f;
            for (int dc = 0; dc < 2; ++dc) {
              const double w = wr * (dc ? lc.f : 1.0 - lc.f);
              const float* src = params_.data() +
                                 texel_base(static_cast<int>(layer), face,
                                            lr.i0 + dr, lc.i0 + dc);
              for (int ch = 0; ch < kChannels; ++ch) acc[ch] += w * src[ch];
            }
          }
          float* dst = fine.params_.data() +
                       fine.texel_base(static_cast<int>(layer), face, fr, fc);
          for (int ch = 0; ch < kChannels; ++ch)
            dst[ch] = static_cast<float>(acc[ch]);
        }
      }
    }
  }

  fine.clamp_sigma();  // boundary extrapolation may undershoot zero
  return fine;
}

void Scene::clamp_sigma() {
  for (std::size_t i = kSigmaChannel; i < params_.size(); i += kChannels)
    params_[i] = std::max(params_[i], 0.0f);
}

float Scene::min_sigma() const {
  float m = std::numeric_limits<float>::infinity();
  for (std::size_t i = kSigmaChannel; i < params_.size(); i += kChannels)
    m = std::min(m, params_[i]);
  return m;
}

}  // namespace radgrid
