// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "radgrid/render.hpp"
#include "support/fixture.hpp"
#include "support/oracles.hpp"

using namespace radgrid;

namespace {

Camera front_camera(int size, double dist = 3.0, double fov = 0.8) {
  Eigen::Matrix4d pose = Eigen::Matrix4d::Identity();
  pose(2, 3) = dist;  // at +z looking along -z
  return Camera(pose, focal_from_angle_x(fov, size), size, size);
}

// Grid-only opacity of the pixel ray, via the public sampling/forward API.
double grid_opacity(const Scene& scene, const Camera& cam, int row, int col) {
  const Ray ray = generate_ray(cam, row, col, 0.5, 0.5);
  RaySampleList samples;
  build_samples(scene, ray, {}, 0.0, samples);
  if (samples.samples.empty()) return 0.0;
  RayEval eval;
  forward_eval(samples, scene, eval);
  return 1.0 - eval.t_grid;
}

}  // namespace

TEST_CASE("empty scene renders the background everywhere") {
  const Scene scene = test::random_scene({4, 4, 4}, 0, 0, 1, 0.0, 0.0);
  RenderOptions opts;
  opts.background = Vec3(0.25, 0.5, 0.75);
  const ImageF img = render_view(scene, front_camera(16), opts);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      CHECK(img.at(r, c)[0] == doctest::Approx(0.25));
      CHECK(img.at(r, c)[1] == doctest::Approx(0.5));
      CHECK(img.at(r, c)[2] == doctest::Approx(0.75));
    }
  const auto mask = foreground_mask(scene, front_camera(16));
  for (auto m : mask) CHECK(m == 0);
}

TEST_CASE("opaque red grid fills the frame in red") {
  Scene scene = test::random_scene({8, 8, 8}, 0, 0, 2);
  for (std::size_t i = 0; i < scene.param_count(); i += kChannels) {
    scene.params()[i + 0] = 1.0f;
    scene.params()[i + 1] = 0.0f;
    scene.params()[i + 2] = 0.0f;
    scene.params()[i + 3] = 200.0f;
  }
  // Narrow fov from close by: every pixel ray passes through the grid.
  const Camera cam = front_camera(24, 2.5, 0.5);
  const ImageF img = render_view(scene, cam, {});
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c) {
      CHECK(img.at(r, c)[0] == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(img.at(r, c)[1] == doctest::Approx(0.0));
      CHECK(img.at(r, c)[2] == doctest::Approx(0.0));
    }
  const auto mask = foreground_mask(scene, cam);
  for (auto m : mask) CHECK(m == 1);
}

TEST_CASE("threshold changes exactly the pixels with partial grid opacity") {
  // A soft sphere produces opacity spanning (0,1) across the image.
  const Scene scene = test::make_gt_scene(16, 8);
  const Camera cam = front_camera(32);
  RenderOptions on, off;
  on.threshold = true;
  off.threshold = false;
  const ImageF with = render_view(scene, cam, on);
  const ImageF without = render_view(scene, cam, off);
  const auto mask = foreground_mask(scene, cam);

  int differing = 0, partial = 0;
  for (int r = 0; r < 32; ++r) {
    for (int c = 0; c < 32; ++c) {
      const double opacity = grid_opacity(scene, cam, r, c);
      const bool diff =
          std::memcmp(with.at(r, c), without.at(r, c), 3 * sizeof(float)) != 0;
      if (diff) {
        ++differing;
        CHECK(opacity > 0.0);
        CHECK(opacity < kOpacityThreshold);
      }
      if (opacity > 0.0 && opacity < kOpacityThreshold) ++partial;
      // Mask agrees with the threshold predicate pixel-for-pixel.
      CHECK(mask[r * 32 + c] == (opacity >= kOpacityThreshold ? 1 : 0));
    }
  }
  CHECK(differing > 0);  // the case is non-degenerate
  CHECK(partial >= differing);
}

TEST_CASE("psnr of identical images is the inf sentinel") {
  ImageF a(8, 8);
  for (auto& v : a.pixels) v = 0.3f;
  CHECK(std::isinf(psnr(a, a)));
}

TEST_CASE("psnr closed forms") {
  ImageF a(8, 8), b(8, 8);
  for (auto& v : a.pixels) v = 0.75f;
  for (auto& v : b.pixels) v = 0.25f;
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(1.0 / 0.25)).epsilon(1e-9));
  CHECK(psnr(a, b) == doctest::Approx(6.0206).epsilon(1e-4));
  CHECK(psnr(a, b) == doctest::Approx(psnr(b, a)));  // symmetric

  for (auto& v : a.pixels) v = 1.0f;
  for (auto& v : b.pixels) v = 0.0f;
  CHECK(psnr(a, b) == doctest::Approx(0.0));
}

TEST_CASE("masked psnr semantics") {
  ImageF a(4, 1), b(4, 1);
  // Per-pixel squared errors: 0.2^2 on pixels 0-1, 0.4^2 on pixels 2-3.
  for (int c = 0; c < 4; ++c)
    for (int ch = 0; ch < 3; ++ch) {
      a.at(0, c)[ch] = 0.5f;
      b.at(0, c)[ch] = c < 2 ? 0.7f : 0.9f;
    }
  const std::vector<std::uint8_t> all(4, 1);
  CHECK(psnr(a, b, &all) == doctest::Approx(psnr(a, b)));

  // Restricting to the low-error pixels cannot lower the PSNR.
  const std::vector<std::uint8_t> low = {1, 1, 0, 0};
  CHECK(psnr(a, b, &low) > psnr(a, b));

  const std::vector<std::uint8_t> none(4, 0);
  CHECK_THROWS_AS(psnr(a, b, &none), std::invalid_argument);

  ImageF wrong(3, 1);
  CHECK_THROWS_AS(psnr(a, wrong), std::invalid_argument);
}

TEST_CASE("rendering is deterministic") {
  const Scene scene = test::make_gt_scene(8, 8);
  const Camera cam = front_camera(16);
  const ImageF a = render_view(scene, cam, {});
  const ImageF b = render_view(scene, cam, {});
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("env layers show through where the grid is transparent") {
  Scene scene = test::make_gt_scene(8, 8);
  // Clear the grid: only env layers and background remain.
  for (std::size_t i = 0; i < scene.grid_param_count(); i += kChannels)
    scene.params()[i + kSigmaChannel] = 0.0f;
  RenderOptions opts;
  opts.background = Vec3(1, 1, 1);
  const ImageF img = render_view(scene, front_camera(16), opts);
  // The outer fixture layer is near-opaque with colors well below 1.
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) CHECK(img.at(r, c)[0] < 0.99f);
}

TEST_CASE("to_display matches the png byte domain") {
  ImageF img(2, 1);
  img.at(0, 0)[0] = 0.5f;
  img.at(0, 1)[0] = -0.25f;  // clamps to 0
  const ImageF enc = to_display(img, false);
  CHECK(enc.at(0, 0)[0] == doctest::Approx(std::round(0.5 * 255) / 255.0));
  CHECK(enc.at(0, 1)[0] == 0.0f);
  const ImageF enc_srgb = to_display(img, true);
  CHECK(enc_srgb.at(0, 0)[0] ==
        doctest::Approx(std::round(linear_to_srgb(0.5f) * 255) / 255.0));
}
