// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace radgrid {

// Planar-free RGB float image, values nominally in [0,1].
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;  // 3 * width * height, rgb interleaved

  ImageF() = default;
  ImageF(int w, int h) : width(w), height(h), pixels(3ull * w * h, 0.0f) {}

  float* at(int row, int col) {
    return pixels.data() + 3ull * (static_cast<std::size_t>(row) * width + col);
  }
  const float* at(int row, int col) const {
    return pixels.data() + 3ull * (static_cast<std::size_t>(row) * width + col);
  }
};

float srgb_to_linear(float c);
float linear_to_srgb(float c);

// 8-bit PNG payload as decoded from disk (1, 2, 3 or 4 channels).
struct Png8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

Png8 read_png(const std::filesystem::path& path);
// 8-bit RGB; written atomically (temp file + rename).
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::uint8_t* rgb);

// Encode a linear float image to 8-bit RGB bytes (optionally through the
// sRGB transfer curve) and write it.
void write_image(const std::filesystem::path& path, const ImageF& img, bool srgb);

// 2x box downscale (truncating odd dimensions' last row/column into the
// preceding box).
ImageF downscale2x(const ImageF& img);

// Maps a linear image to the quantized 8-bit output domain (encoded values
// in {0/255 .. 255/255}); PSNR comparisons happen there so they see exactly
// what a written PNG holds.
ImageF to_display(const ImageF& img, bool srgb);

}  // namespace radgrid
