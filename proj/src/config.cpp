// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace radgrid {

using nlohmann::json;

namespace {

Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error(std::string("config: ") + what +
                             " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

HoldoutMode parse_holdout(const std::string& s) {
  if (s == "none") return HoldoutMode::kNone;
  if (s == "level") return HoldoutMode::kPerLevel;
  if (s == "iteration") return HoldoutMode::kPerIteration;
  throw std::runtime_error("config: holdout_psnr must be none|level|iteration");
}

}  // namespace

Vec3 AppConfig::linear_background() const {
  if (!srgb) return background;
  return {srgb_to_linear(static_cast<float>(background.x())),
          srgb_to_linear(static_cast<float>(background.y())),
          srgb_to_linear(static_cast<float>(background.z()))};
}

DatasetOptions AppConfig::dataset_options() const {
  return {linear_background(), srgb};
}

GnConfig AppConfig::solver_config() const {
  GnConfig cfg = gn;
  cfg.background = linear_background();
  return cfg;
}

AppConfig AppConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  AppConfig c;
  GnConfig& g = c.gn;
  const auto opt = [&](const char* key) -> const json* {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
  };
  if (auto* v = opt("levels")) g.levels = v->get<int>();
  if (auto* v = opt("iters_per_level")) g.iters_per_level = v->get<int>();
  if (auto* v = opt("base_grid")) {
    const Vec3 d = parse_vec3(*v, "base_grid");
    g.base_grid = Vec3i(static_cast<int>(d.x()), static_cast<int>(d.y()),
                        static_cast<int>(d.z()));
  }
  if (auto* v = opt("base_face_res")) g.base_face_res = v->get<int>();
  if (auto* v = opt("env_layer_count")) g.env_layer_count = v->get<int>();
  if (auto* v = opt("aabb")) {
    if (v->contains("min") && v->contains("max")) {
      g.aabb = {parse_vec3((*v)["min"], "aabb.min"),
                parse_vec3((*v)["max"], "aabb.max")};
    } else if (v->contains("center") && v->contains("half_extent")) {
      const Vec3 ctr = parse_vec3((*v)["center"], "aabb.center");
      const double h = (*v)["half_extent"].get<double>();
      g.aabb = Aabb::cube(ctr, h);
    } else {
      throw std::runtime_error("config: aabb needs min/max or center/half_extent");
    }
  }
  if (auto* v = opt("lambda_aux")) g.lambda_aux = v->get<double>();
  if (auto* v = opt("backtrack_alpha")) g.backtrack_alpha = v->get<double>();
  if (auto* v = opt("backtrack_cap")) g.backtrack_cap = v->get<int>();
  if (auto* v = opt("pcg")) {
    if (v->contains("eps_scale")) g.pcg_eps_scale = (*v)["eps_scale"].get<double>();
    if (v->contains("stall_ratio"))
      g.pcg_stall_ratio = (*v)["stall_ratio"].get<double>();
    if (v->contains("max_iters")) g.pcg_max_iters = (*v)["max_iters"].get<int>();
  }
  if (auto* v = opt("seed")) g.rng_seed = v->get<std::uint64_t>();
  if (auto* v = opt("deterministic")) g.deterministic = v->get<bool>();
  if (auto* v = opt("jitter")) g.jitter = v->get<bool>();
  if (auto* v = opt("image_pyramid")) g.image_pyramid = v->get<bool>();
  if (auto* v = opt("subsample_rays")) g.subsample_rays = v->get<std::size_t>();
  if (auto* v = opt("background")) c.background = parse_vec3(*v, "background");
  if (auto* v = opt("srgb")) c.srgb = v->get<bool>();
  if (auto* v = opt("holdout_psnr")) c.holdout_mode = parse_holdout(v->get<std::string>());
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string AppConfig::to_json_text() const {
  json doc;
  doc["levels"] = gn.levels;
  doc["iters_per_level"] = gn.iters_per_level;
  doc["base_grid"] = {gn.base_grid.x(), gn.base_grid.y(), gn.base_grid.z()};
  doc["base_face_res"] = gn.base_face_res;
  doc["env_layer_count"] = gn.env_layer_count;
  doc["aabb"] = {{"min", {gn.aabb.min.x(), gn.aabb.min.y(), gn.aabb.min.z()}},
                 {"max", {gn.aabb.max.x(), gn.aabb.max.y(), gn.aabb.max.z()}}};
  doc["lambda_aux"] = gn.lambda_aux;
  doc["backtrack_alpha"] = gn.backtrack_alpha;
  doc["backtrack_cap"] = gn.backtrack_cap;
  doc["pcg"] = {{"eps_scale", gn.pcg_eps_scale},
                {"stall_ratio", gn.pcg_stall_ratio},
                {"max_iters", gn.pcg_max_iters}};
  doc["seed"] = gn.rng_seed;
  doc["deterministic"] = gn.deterministic;
  doc["jitter"] = gn.jitter;
  doc["image_pyramid"] = gn.image_pyramid;
  doc["subsample_rays"] = gn.subsample_rays;
  doc["background"] = {background.x(), background.y(), background.z()};
  doc["srgb"] = srgb;
  doc["holdout_psnr"] = holdout_mode == HoldoutMode::kNone        ? "none"
                        : holdout_mode == HoldoutMode::kPerLevel ? "level"
                                                                 : "iteration";
  return doc.dump(1);
}

}  // namespace radgrid
