// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace radgrid {

namespace {

constexpr char kMagic[4] = {'P', 'E', 'R', 'F'};

// Explicit little-endian serialization, independent of host order.
template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::is_arithmetic_v<T>);
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get(const char* p) {
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  T v;
  std::memcpy(&v, &bits, sizeof(T));
  return v;
}

struct Reader {
  std::ifstream in;
  std::filesystem::path path;
  std::size_t offset = 0;

  void read(char* dst, std::size_t n, const char* what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw std::runtime_error("checkpoint: truncated " + std::string(what) +
                               " in " + path.string() + ": expected " +
                               std::to_string(offset + n) + " bytes, got " +
                               std::to_string(offset + in.gcount()));
    offset += n;
  }
  template <typename T>
  T value(const char* what) {
    char buf[8];
    read(buf, sizeof(T), what);
    return get<T>(buf);
  }
};

CheckpointHeader read_header(Reader& r) {
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + r.path.string());
  CheckpointHeader h;
  h.version = r.value<std::uint32_t>("version");
  if (h.version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(h.version) + " in " + r.path.string() +
                             " (expected " + std::to_string(kCheckpointVersion) + ")");
  for (int a = 0; a < 3; ++a) h.dims[a] = static_cast<int>(r.value<std::uint32_t>("dims"));
  for (int a = 0; a < 3; ++a) h.aabb.min[a] = r.value<double>("aabb");
  for (int a = 0; a < 3; ++a) h.aabb.max[a] = r.value<double>("aabb");
  const auto n_layers = r.value<std::uint32_t>("layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    EnvLayerDesc l;
    l.face_res = static_cast<int>(r.value<std::uint32_t>("layer face_res"));
    l.half_extent = r.value<double>("layer half_extent");
    h.layers.push_back(l);
  }
  return h;
}

}  // namespace

std::size_t CheckpointHeader::param_count() const {
  std::size_t n = static_cast<std::size_t>(kChannels) * dims.x() * dims.y() * dims.z();
  for (const auto& l : layers)
    n += static_cast<std::size_t>(kChannels) * kEnvFaces * l.face_res * l.face_res;
  return n;
}

void save_checkpoint(const Scene& scene, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(64 + 4 * scene.param_count());
  buf.append(kMagic, 4);
  put<std::uint32_t>(buf, kCheckpointVersion);
  for (int a = 0; a < 3; ++a) put<std::uint32_t>(buf, scene.dims()[a]);
  for (int a = 0; a < 3; ++a) put<double>(buf, scene.aabb().min[a]);
  for (int a = 0; a < 3; ++a) put<double>(buf, scene.aabb().max[a]);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(scene.layers().size()));
  for (const auto& l : scene.layers()) {
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(l.face_res));
    put<double>(buf, l.half_extent);
  }
  for (float v : scene.params()) put<float>(buf, v);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw std::runtime_error("checkpoint: cannot open for write: " + tmp.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointHeader inspect_checkpoint(const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), path};
  if (!r.in)
    throw std::runtime_error("checkpoint: cannot open: " + path.string());
  return read_header(r);
}

Scene load_checkpoint(const std::filesystem::path& path) {
  Reader r{std::ifstream(path, std::ios::binary), path};
  if (!r.in)
    throw std::runtime_error("checkpoint: cannot open: " + path.string());
  const CheckpointHeader h = read_header(r);
  Scene scene(h.dims, h.aabb, h.layers);
  const std::size_t n = scene.param_count();
  if (n != h.param_count())
    throw std::runtime_error("checkpoint: inconsistent header in " + path.string());
  std::vector<char> payload(4 * n);
  r.read(payload.data(), payload.size(), "payload");
  for (std::size_t i = 0; i < n; ++i)
    scene.params()[i] = get<float>(payload.data() + 4 * i);
  return scene;
}

}  // namespace radgrid
