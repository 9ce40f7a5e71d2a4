// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "radgrid/thread_pool.hpp"

namespace radgrid {

namespace {

struct MarchParts {
  Vec3 grid_color{0, 0, 0};
  double grid_t = 1.0;
  Vec3 env_color{0, 0, 0};  // unattenuated by the grid
  double env_t = 1.0;
};

// Grid and env contributions marched separately so the opacity threshold
// can drop the grid term without re-marching.
MarchParts march_parts(const RaySampleList& samples, const Scene& scene) {
  MarchParts out;
  const float* params = scene.params().data();
  for (const RaySample& s : samples.samples) {
    const double sg = gather(params, s, kSigmaChannel);
    const Vec3 c(gather(params, s, 0), gather(params, s, 1), gather(params, s, 2));
    const double en = std::exp(-sg * s.delta);
    if (s.kind == 0) {
      out.grid_color += (out.grid_t * (1.0 - en)) * c;
      out.grid_t *= en;
    } else {
      out.env_color += (out.env_t * (1.0 - en)) * c;
      out.env_t *= en;
    }
  }
  return out;
}

Vec3 compose(const MarchParts& m, bool thresholded, const Vec3& bg) {
  if (thresholded && (1.0 - m.grid_t) < kOpacityThreshold)
    return m.env_color + m.env_t * bg;
  return m.grid_color + m.grid_t * (m.env_color + m.env_t * bg);
}

}  // namespace

ImageF render_view(const Scene& scene, const Camera& cam,
                   const RenderOptions& opts) {
  ImageF img(cam.width, cam.height);
  const JitterSpec no_jitter;
  ThreadPool& pool = ThreadPool::global();
  std::vector<RaySampleList> scratch(pool.size());
  pool.run_chunks(cam.height, [&](int row, int worker) {
    RaySampleList& samples = scratch[worker];
    for (int col = 0; col < cam.width; ++col) {
      const Ray ray = generate_ray(cam, row, col, 0.5, 0.5);
      build_samples(scene, ray, no_jitter, 0.0, samples);
      const Vec3 c =
          compose(march_parts(samples, scene), opts.threshold, opts.background);
      float* px = img.at(row, col);
      for (int ch = 0; ch < 3; ++ch)
        px[ch] = static_cast<float>(std::clamp(c[ch], 0.0, 1.0));
    }
  });
  return img;
}

std::vector<std::uint8_t> foreground_mask(const Scene& scene, const Camera& cam) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cam.width) * cam.height, 0);
  const JitterSpec no_jitter;
  ThreadPool& pool = ThreadPool::global();
  std::vector<RaySampleList> scratch(pool.size());
  pool.run_chunks(cam.height, [&](int row, int worker) {
    RaySampleList& samples = scratch[worker];
    for (int col = 0; col < cam.width; ++col) {
      const Ray ray = generate_ray(cam, row, col, 0.5, 0.5);
      build_samples(scene, ray, no_jitter, 0.0, samples);
      const MarchParts m = march_parts(samples, scene);
      mask[static_cast<std::size_t>(row) * cam.width + col] =
          (1.0 - m.grid_t) >= kOpacityThreshold ? 1 : 0;
    }
  });
  return mask;
}

double psnr(const ImageF& a, const ImageF& b,
            const std::vector<std::uint8_t>* mask) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("psnr: image dimensions differ");
  const std::size_t n_px = static_cast<std::size_t>(a.width) * a.height;
  if (mask && mask->size() != n_px)
    throw std::invalid_argument("psnr: mask dimensions differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n_px; ++i) {
    if (mask && !(*mask)[i]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = static_cast<double>(a.pixels[3 * i + ch]) -
                       static_cast<double>(b.pixels[3 * i + ch]);
      sum += d * d;
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("psnr: mask excludes all pixels");
  const double mse = sum / (3.0 * static_cast<double>(count));
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace radgrid
