// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace radgrid {

float srgb_to_linear(float c) {
  return c <= 0.04045f ? c / 12.92f : std::pow((c + 0.055f) / 1.055f, 2.4f);
}

float linear_to_srgb(float c) {
  return c <= 0.0031308f ? 12.92f * c
                         : 1.055f * std::pow(c, 1.0f / 2.4f) - 0.055f;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
  throw std::runtime_error("png: " + std::string(what) + ": " + path.string());
}

}  // namespace

Png8 read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail(path, "cannot open");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(path, "out of memory");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(path, "out of memory");
  }
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "decode error");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  Png8 out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = static_cast<int>(png_get_channels(png, info));
  out.data.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  rows.resize(out.height);
  const std::size_t stride = static_cast<std::size_t>(out.width) * out.channels;
  for (int r = 0; r < out.height; ++r) rows[r] = out.data.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    const std::uint8_t* rgb) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    FilePtr fp(std::fopen(tmp.string().c_str(), "wb"));
    if (!fp) fail(tmp, "cannot open for write");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) fail(path, "out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      fail(path, "out of memory");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      fail(path, "encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int r = 0; r < height; ++r)
      rows[r] = const_cast<png_bytep>(rgb + 3ull * r * width);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

inline std::uint8_t encode8(float v, bool srgb) {
  v = std::clamp(v, 0.0f, 1.0f);
  if (srgb) v = linear_to_srgb(v);
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

}  // namespace

void write_image(const std::filesystem::path& path, const ImageF& img,
                 bool srgb) {
  std::vector<std::uint8_t> rgb(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    rgb[i] = encode8(img.pixels[i], srgb);
  write_png_rgb8(path, img.width, img.height, rgb.data());
}

ImageF downscale2x(const ImageF& img) {
  ImageF out(std::max(1, img.width / 2), std::max(1, img.height / 2));
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      float acc[3] = {0, 0, 0};
      for (int dr = 0; dr < 2; ++dr)
        for (int dc = 0; dc < 2; ++dc) {
          const float* p = img.at(std::min(2 * r + dr, img.height - 1),
                                  std::min(2 * c + dc, img.width - 1));
          for (int ch = 0; ch < 3; ++ch) acc[ch] += p[ch];
        }
      float* q = out.at(r, c);
      for (int ch = 0; ch < 3; ++ch) q[ch] = 0.25f * acc[ch];
    }
  }
  return out;
}

ImageF to_display(const ImageF& img, bool srgb) {
  ImageF out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    out.pixels[i] = encode8(img.pixels[i], srgb) / 255.0f;
  return out;
}

}  // namespace radgrid
