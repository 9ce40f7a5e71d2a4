// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "fixture.hpp"

#include <cmath>

#include "radgrid/render.hpp"

namespace radgrid::test {

namespace {

double smooth01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

Scene make_gt_scene(int grid_n, int face_res) {
  LevelSpec spec;
  spec.grid_dims = Vec3i(grid_n, grid_n, grid_n);
  spec.env_face_res = face_res;
  spec.env_layer_count = 2;
  spec.aabb = {Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  Scene s = Scene::init_level(spec, 0);

  const Vec3 cell = s.cell_size();
  for (int z = 0; z < grid_n; ++z) {
    for (int y = 0; y < grid_n; ++y) {
      for (int x = 0; x < grid_n; ++x) {
        const Vec3 p = s.aabb().min +
                       Vec3((x + 0.5) * cell.x(), (y + 0.5) * cell.y(),
                            (z + 0.5) * cell.z());
        const double sigma = 40.0 * smooth01((0.55 - p.norm()) / 0.15);
        float* cp = s.params().data() + s.cell_base(x, y, z);
        cp[0] = static_cast<float>(0.25 + 0.25 * (p.x() + 1.0));
        cp[1] = static_cast<float>(0.25 + 0.25 * (p.y() + 1.0));
        cp[2] = static_cast<float>(0.25 + 0.25 * (p.z() + 1.0));
        cp[3] = static_cast<float>(sigma);
      }
    }
  }

  for (int layer = 0; layer < 2; ++layer) {
    const int res = s.layers()[layer].face_res;
    const float sigma = layer == 0 ? 0.05f : 4.0f;
    for (int face = 0; face < kEnvFaces; ++face) {
      for (int r = 0; r < res; ++r) {
        for (int c = 0; c < res; ++c) {
          const double u = (c + 0.5) / res;
          const double v = (r + 0.5) / res;
          float* tp = s.params().data() + s.texel_base(layer, face, r, c);
          tp[0] = static_cast<float>(0.2 + 0.1 * face + 0.25 * u);
          tp[1] = static_cast<float>(0.25 + 0.08 * face + 0.3 * v);
          tp[2] = static_cast<float>(0.6 - 0.05 * face + 0.2 * u * v);
          tp[3] = sigma;
        }
      }
    }
  }
  return s;
}

std::vector<Camera> fixture_cameras(int count, int image_size, double fov_x,
                                    double radius) {
  const double focal = focal_from_angle_x(fov_x, image_size);
  std::vector<Camera> cams;
  cams.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double az = i * 2.39996322972865332;  // golden angle
    const double frac = std::fmod(0.618033988749895 * i, 1.0);
    const double elev = 0.15 + 0.9 * frac;
    const Vec3 eye =
        radius * Vec3(std::cos(az) * std::cos(elev), std::sin(az) * std::cos(elev),
                      std::sin(elev));
    const Vec3 back = eye.normalized();  // looking at the origin
    const Vec3 right = Vec3(0, 0, 1).cross(back).normalized();
    const Vec3 up = back.cross(right);
    Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
    pose.block<3, 1>(0, 0) = right;
    pose.block<3, 1>(0, 1) = up;
    pose.block<3, 1>(0, 2) = back;
    pose.block<3, 1>(0, 3) = eye;
    cams.emplace_back(pose, focal, image_size, image_size);
  }
  return cams;
}

void write_fixture_dataset(const std::filesystem::path& root,
                           const Scene& gt_scene, int views, int image_size) {
  const std::vector<Camera> cams =
      fixture_cameras(views, image_size, kFixtureFovX, 3.0);
  RenderOptions opts;
  opts.threshold = false;  // clean ground truth, no converged-scene cleanup
  opts.background = Vec3(1, 1, 1);

  Dataset train, test;
  for (int i = 0; i < views; ++i) {
    const ImageF img = render_view(gt_scene, cams[i], opts);
    Dataset& dst = (i % 5 == 4) ? test : train;
    dst.cameras.push_back(cams[i]);
    dst.images.push_back(img);
    dst.names.push_back("r_" + std::to_string(i));
  }
  train.width = test.width = image_size;
  train.height = test.height = image_size;

  DatasetOptions dopts;
  dopts.background = Vec3(1, 1, 1);
  dopts.srgb = false;  // fixture is linear end to end
  std::filesystem::create_directories(root);
  save_dataset(root, "train", train, kFixtureFovX, dopts);
  save_dataset(root, "test", test, kFixtureFovX, dopts);
}

GnConfig fixture_config() {
  GnConfig cfg;
  cfg.levels = 2;
  cfg.iters_per_level = 30;
  cfg.base_grid = Vec3i(16, 16, 16);
  cfg.base_face_res = 16;
  cfg.env_layer_count = 2;
  cfg.aabb = {Vec3(-1, -1, -1), Vec3(1, 1, 1)};
  cfg.lambda_aux = 0.1;
  cfg.rng_seed = 1234;
  cfg.background = Vec3(1, 1, 1);
  cfg.jitter = false;
  cfg.deterministic = true;
  cfg.image_pyramid = true;
  return cfg;
}

}  // namespace radgrid::test
