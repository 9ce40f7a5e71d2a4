// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/dataset.hpp"

#include <Eigen/Dense>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "radgrid/thread_pool.hpp"

namespace radgrid {

using nlohmann::json;

namespace {

Eigen::Matrix4d parse_matrix(const json& m, const std::string& frame) {
  if (!m.is_array() || m.size() != 4)
    throw std::runtime_error("dataset: malformed transform_matrix in " + frame);
  Eigen::Matrix4d out;
  for (int r = 0; r < 4; ++r) {
    if (!m[r].is_array() || m[r].size() != 4)
      throw std::runtime_error("dataset: malformed transform_matrix in " + frame);
    for (int c = 0; c < 4; ++c) out(r, c) = m[r][c].get<double>();
  }
  return out;
}

// Accepts up to 1e-3 deviation from a rigid rotation, then projects to the
// nearest rotation so the Camera invariant (1e-5) holds.
Eigen::Matrix4d sanitize_pose(const Eigen::Matrix4d& pose, const std::string& frame) {
  Eigen::Matrix3d r = pose.topLeftCorner<3, 3>();
  const double dev =
      (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (dev > 1e-3 || r.determinant() < 0.0)
    throw std::runtime_error("dataset: non-rigid rotation in " + frame);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r = svd.matrixU() * svd.matrixV().transpose();
  Eigen::Matrix4d out = pose;
  out.topLeftCorner<3, 3>() = r;
  out.row(3) << 0, 0, 0, 1;
  return out;
}

ImageF decode_frame(const Png8& png, const DatasetOptions& opts) {
  ImageF img(png.width, png.height);
  const Vec3f bg = opts.background.cast<float>();
  const int ch = png.channels;
  const std::size_t n = static_cast<std::size_t>(png.width) * png.height;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* src = png.data.data() + i * ch;
    float rgb[3];
    if (ch >= 3) {
      for (int k = 0; k < 3; ++k) rgb[k] = src[k] / 255.0f;
    } else {
      rgb[0] = rgb[1] = rgb[2] = src[0] / 255.0f;
    }
    if (opts.srgb)
      for (float& v : rgb) v = srgb_to_linear(v);
    float alpha = 1.0f;
    if (ch == 4 || ch == 2) alpha = src[ch - 1] / 255.0f;
    float* dst = img.pixels.data() + 3 * i;
    for (int k = 0; k < 3; ++k)
      dst[k] = alpha * rgb[k] + (1.0f - alpha) * bg[k];
  }
  return img;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& root, const std::string& split,
                     const DatasetOptions& opts) {
  const std::filesystem::path manifest = root / ("transforms_" + split + ".json");
  std::ifstream in(manifest);
  if (!in)
    throw std::runtime_error("dataset: cannot open manifest " + manifest.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("dataset: invalid JSON in " + manifest.string() +
                             ": " + e.what());
  }
  if (!doc.contains("camera_angle_x") || !doc.contains("frames"))
    throw std::runtime_error("dataset: manifest missing camera_angle_x/frames: " +
                             manifest.string());
  const double angle_x = doc["camera_angle_x"].get<double>();

  Dataset ds;
  const auto& frames = doc["frames"];
  ds.cameras.reserve(frames.size());
  ds.images.resize(frames.size());
  std::vector<std::filesystem::path> files(frames.size());

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    std::string rel = f.at("file_path").get<std::string>();
    if (rel.rfind("./", 0) == 0) rel = rel.substr(2);
    std::filesystem::path file = root / rel;
    if (!file.has_extension()) file += ".png";
    files[i] = file;
    ds.names.push_back(file.stem().string());
  }

  // Decode in parallel; sizes and cameras are fixed up afterwards.
  std::vector<Png8> pngs(frames.size());
  std::vector<std::string> errors(frames.size());
  ThreadPool::global().run_chunks(
      static_cast<int>(frames.size()), [&](int i, int) {
        try {
          pngs[i] = read_png(files[i]);
        } catch (const std::exception& e) {
          errors[i] = e.what();
        }
      });
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);

  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (pngs[i].width != pngs[0].width || pngs[i].height != pngs[0].height)
      throw std::runtime_error("dataset: image dimension mismatch at " +
                               files[i].string());
    const Eigen::Matrix4d pose = sanitize_pose(
        parse_matrix(frames[i].at("transform_matrix"), files[i].string()),
        files[i].string());
    ds.cameras.emplace_back(pose, focal_from_angle_x(angle_x, pngs[i].width),
                            pngs[i].width, pngs[i].height);
    ds.images[i] = decode_frame(pngs[i], opts);
  }
  ds.width = ds.cameras.empty() ? 0 : ds.cameras[0].width;
  ds.height = ds.cameras.empty() ? 0 : ds.cameras[0].height;
  return ds;
}

void save_dataset(const std::filesystem::path& root, const std::string& split,
                  const Dataset& ds, double camera_angle_x,
                  const DatasetOptions& opts) {
  std::filesystem::create_directories(root / split);
  json doc;
  doc["camera_angle_x"] = camera_angle_x;
  doc["frames"] = json::array();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string name =
        ds.names.size() == ds.size() ? ds.names[i] : "r_" + std::to_string(i);
    json frame;
    frame["file_path"] = "./" + split + "/" + name;
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c) row.push_back(ds.cameras[i].pose(r, c));
      rows.push_back(row);
    }
    frame["transform_matrix"] = rows;
    doc["frames"].push_back(frame);
    write_image(root / split / (name + ".png"), ds.images[i], opts.srgb);
  }
  const std::filesystem::path manifest = root / ("transforms_" + split + ".json");
  const std::filesystem::path tmp = manifest.string() + ".tmp";
  {
    std::ofstream out(tmp);
    out << doc.dump(1) << "\n";
  }
  std::filesystem::rename(tmp, manifest);
}

Dataset Dataset::downscaled() const {
  Dataset out;
  out.cameras.reserve(cameras.size());
  out.images.reserve(images.size());
  out.names = names;
  for (const auto& c : cameras) out.cameras.push_back(c.downscaled());
  for (const auto& im : images) out.images.push_back(downscale2x(im));
  out.width = out.cameras.empty() ? 0 : out.cameras[0].width;
  out.height = out.cameras.empty() ? 0 : out.cameras[0].height;
  return out;
}

}  // namespace radgrid
