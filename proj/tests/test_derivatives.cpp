// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <new>
#include <random>

#include "radgrid/derivatives.hpp"
#include "radgrid/kernels.hpp"
#include "support/oracles.hpp"

using namespace radgrid;

namespace {

std::atomic<long> g_allocations{0};
std::atomic<bool> g_count_allocations{false};

bool close_rel(double a, double b, double rtol, double atol) {
  return std::abs(a - b) <= atol + rtol * std::abs(b);
}

SystemConfig plain_cfg(double lambda = 0.1) {
  SystemConfig cfg;
  cfg.fwd.background = Vec3(0.9, 0.8, 0.7);
  cfg.fwd.lambda_aux = lambda;
  return cfg;
}

// 2x2x2 grid with unit cells on [0,2]^3, all parameters zeroed.
Scene two_cube_scene() {
  LevelSpec spec;
  spec.grid_dims = Vec3i(2, 2, 2);
  spec.env_layer_count = 0;
  spec.aabb = {Vec3(0, 0, 0), Vec3(2, 2, 2)};
  Scene s = Scene::init_level(spec, 0);
  std::fill(s.params().begin(), s.params().end(), 0.0f);
  return s;
}

// Ray along +x through the (y,z) = (0.5,0.5) cell-center line; with unit
// steps its two samples sit exactly at the cell centers of (0,0,0), (1,0,0).
Ray center_line_ray() {
  Ray ray;
  ray.origin = Vec3(-4, 0.5, 0.5);
  ray.dir = Vec3(1, 0, 0);
  return ray;
}

}  // namespace

void* operator new(std::size_t size) {
  if (g_count_allocations.load(std::memory_order_relaxed))
    g_allocations.fetch_add(1, std::memory_order_relaxed);
  if (void* p = std::malloc(size)) return p;
  throw std::bad_alloc();
}

void operator delete(void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }

TEST_CASE("first sample with sigma*delta = ln2 has dH/dc = 1/2") {
  Scene scene = two_cube_scene();
  const float ln2 = static_cast<float>(std::log(2.0));
  scene.params()[scene.cell_base(0, 0, 0) + kSigmaChannel] = ln2;
  scene.params()[scene.cell_base(0, 0, 0)] = 0.8f;

  RaySampleList samples;
  build_samples(scene, center_line_ray(), {}, 1.0, samples);
  REQUIRE(samples.samples.size() == 2);
  SamplePartials parts;
  backward_partials(samples, scene, parts);
  // Prefix transmittance of the first sample is exactly 1.
  CHECK(parts.d_color[0] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("zero opacity: dH/dc = 0 and dH/dsigma = delta * c") {
  Scene scene = test::random_scene({4, 4, 4}, 1, 4, 2, 0.0, 0.0);  // sigma = 0
  const auto rays = test::random_rays(scene, 8, 3);
  RaySampleList samples;
  RayEval eval;
  SamplePartials parts;
  for (const Ray& ray : rays) {
    build_samples(scene, ray, {}, 0.0, samples);
    if (samples.samples.empty()) continue;
    forward_eval(samples, scene, eval);
    backward_partials(samples, eval, parts);
    for (int i = 0; i < parts.n; ++i) {
      CHECK(parts.d_color[i] == doctest::Approx(0.0));
      for (int ch = 0; ch < 3; ++ch)
        CHECK(parts.d_sigma[i][ch] ==
              doctest::Approx(samples.samples[i].delta * eval.color[i][ch])
                  .epsilon(1e-9));
    }
  }
}

TEST_CASE("partials match central finite differences on random rays") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Scene scene = test::random_scene({8, 8, 8}, 2, 8, 100 + seed, 0.05, 1.5);
    SystemConfig cfg = plain_cfg();
    cfg.fwd.step_len = test::step_for_samples(scene, 5);
    const auto rays = test::random_rays(scene, 6, 200 + seed);
    for (const Ray& ray : rays) {
      const auto rows = test::impl_residual_rows(ray, scene, cfg);
      RaySampleList samples;
      build_samples(scene, ray, {}, cfg.fwd.step_len, samples);
      std::vector<std::size_t> slots;
      for (const RaySample& s : samples.samples)
        for (int k = 0; k < s.corners; ++k)
          for (int ch = 0; ch < kChannels; ++ch) slots.push_back(s.base[k] + ch);
      std::sort(slots.begin(), slots.end());
      slots.erase(std::unique(slots.begin(), slots.end()), slots.end());
      for (std::size_t slot : slots) {
        const auto fd = test::fd_residual_grad(ray, scene, cfg.fwd, slot, 1e-4);
        for (int r = 0; r < 4; ++r) {
          CAPTURE(slot);
          CAPTURE(r);
          CHECK(close_rel(rows[r][slot], fd[r], 1e-5, 1e-8));
        }
      }
    }
  }
}

TEST_CASE("scatter honors weight, footprints and bounds") {
  Scene scene = test::random_scene({4, 4, 4}, 0, 0, 5);
  Ray ray;
  ray.origin = Vec3(-3, 0.1, 0.1);
  ray.dir = Vec3(1, 0, 0);
  RaySampleList samples;
  build_samples(scene, ray, {}, 0.0, samples);
  REQUIRE(!samples.samples.empty());
  std::vector<double> parts(samples.samples.size(), 1.0);

  DVec out(scene.param_count(), 0.0);
  scatter(parts, samples, 0, 0.0, out);  // weight 0: no-op
  for (double v : out) CHECK(v == 0.0);

  scatter(parts, samples, 0, 2.0, out);
  double total = 0.0;
  for (double v : out) total += v;
  // Weights per sample sum to 1, so mass = weight * n_samples.
  CHECK(total == doctest::Approx(2.0 * parts.size()).epsilon(1e-9));

  DVec small(3, 0.0);
  CHECK_THROWS_AS(scatter(parts, samples, 0, 1.0, small), std::out_of_range);
}

TEST_CASE("scatter at an exact cell center lands in a single cell") {
  Scene scene = two_cube_scene();
  RaySampleList samples;
  build_samples(scene, center_line_ray(), {}, 1.0, samples);
  REQUIRE(samples.samples.size() == 2);
  std::vector<double> parts(samples.samples.size(), 0.0);
  parts[0] = 3.0;  // the sample at the center of cell (0,0,0)
  DVec out(scene.param_count(), 0.0);
  scatter(parts, samples, 1, 1.0, out);
  const std::size_t target = scene.cell_base(0, 0, 0) + 1;
  for (std::size_t i = 0; i < out.size(); ++i)
    CHECK(out[i] == (i == target ? doctest::Approx(3.0) : doctest::Approx(0.0)));
}

TEST_CASE("gradient rows match the dense Jacobian row sums") {
  Scene scene = test::random_scene({4, 4, 4}, 1, 4, 8);
  SystemConfig cfg = plain_cfg();
  const auto rays = test::random_rays(scene, 10, 9);
  const auto dense = test::assemble_dense(rays, scene, cfg);
  for (std::size_t ri = 0; ri < rays.size(); ++ri) {
    const auto rows = test::impl_residual_rows(rays[ri], scene, cfg);
    for (int r = 0; r < 4; ++r)
      for (std::size_t j = 0; j < scene.param_count(); ++j)
        CHECK(close_rel(rows[r][j], dense.jacobian(4 * ri + r, j), 1e-6, 1e-12));
  }
}

TEST_CASE("gn_rhs is zero at zero residuals") {
  // A scene rendering pure background everywhere with matching targets.
  Scene scene = test::random_scene({4, 4, 4}, 0, 0, 11, 0.0, 0.0);
  for (std::size_t i = 0; i < scene.param_count(); i += kChannels)
    for (int ch = 0; ch < 3; ++ch) scene.params()[i + ch] = 0.5f;
  SystemConfig cfg = plain_cfg(0.1);
  cfg.fwd.background = Vec3(0.25, 0.5, 0.75);
  auto rays = test::random_rays(scene, 16, 12);
  for (Ray& r : rays) r.target = Vec3f(0.25f, 0.5f, 0.75f);
  DVec b;
  gn_rhs(rays, scene, cfg, b);
  for (double v : b) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("single-ray rhs follows the chain rule by hand") {
  Scene scene = two_cube_scene();
  const double sigma = 0.4, cr = 0.6;
  float* cell = scene.params().data() + scene.cell_base(0, 0, 0);
  cell[0] = static_cast<float>(cr);
  cell[kSigmaChannel] = static_cast<float>(sigma);

  Ray ray = center_line_ray();
  ray.target = Vec3f(0.1f, 0.0f, 0.0f);
  SystemConfig cfg;
  cfg.fwd.background = Vec3(0, 0, 0);
  cfg.fwd.lambda_aux = 0.0;
  cfg.fwd.step_len = 1.0;  // two unit samples at the two cell centers

  std::vector<Ray> rays = {ray};
  DVec b;
  gn_rhs(rays, scene, cfg, b);

  // Only sample 1 (cell 0,0,0) carries density or color; sample 2 is empty.
  const float sig_f = cell[kSigmaChannel];
  const float cr_f = cell[0];
  const double alpha = 1.0 - std::exp(-static_cast<double>(sig_f));
  const double r_red = alpha * cr_f - static_cast<double>(ray.target[0]);
  const double d_color = alpha;  // prefix transmittance 1, delta 1
  const double d_sigma_red = std::exp(-static_cast<double>(sig_f)) * cr_f;
  const std::size_t base = scene.cell_base(0, 0, 0);
  CHECK(b[base + 0] == doctest::Approx(-d_color * r_red).epsilon(1e-9));
  // Green/blue residuals have zero color and zero suffix: no sigma term.
  CHECK(b[base + kSigmaChannel] ==
        doctest::Approx(-d_sigma_red * r_red).epsilon(1e-9));

  // Cross-check the full vector against the dense oracle.
  const auto dense = test::assemble_dense(rays, scene, cfg);
  const Eigen::VectorXd want = -dense.jacobian.transpose() * dense.residuals;
  for (std::size_t j = 0; j < b.size(); ++j)
    CHECK(close_rel(b[j], want(j), 1e-9, 1e-12));
}

TEST_CASE("matrix-free operators match the dense oracle on a 4^3 grid") {
  Scene scene = test::random_scene({4, 4, 4}, 0, 0, 13);
  SystemConfig cfg = plain_cfg();
  const auto rays = test::random_rays(scene, 50, 14);
  const auto dense = test::assemble_dense(rays, scene, cfg);
  const std::size_t n = scene.param_count();

  DVec b;
  gn_rhs(rays, scene, cfg, b);
  const Eigen::VectorXd b_want = -dense.jacobian.transpose() * dense.residuals;
  for (std::size_t j = 0; j < n; ++j) CHECK(close_rel(b[j], b_want(j), 1e-6, 1e-12));

  DVec diag;
  jacobi_diagonal(rays, scene, cfg, diag);
  const Eigen::VectorXd d_want =
      (dense.jacobian.transpose() * dense.jacobian).diagonal();
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(close_rel(diag[j], d_want(j), 1e-6, 1e-12));
    CHECK(diag[j] >= 0.0);
  }

  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    DVec p(n);
    for (auto& v : p) v = u(rng);
    DVec ap;
    jtj_apply(rays, scene, cfg, p, ap);
    const Eigen::Map<const Eigen::VectorXd> pm(p.data(), n);
    const Eigen::VectorXd want =
        dense.jacobian.transpose() * (dense.jacobian * pm);
    for (std::size_t j = 0; j < n; ++j)
      CHECK(close_rel(ap[j], want(j), 1e-6, 1e-10));
  }
}

TEST_CASE("matrix-free operators match the dense oracle with env layers") {
  Scene scene = test::random_scene({4, 4, 4}, 2, 4, 23);
  SystemConfig cfg = plain_cfg();
  const auto rays = test::random_rays(scene, 40, 24);
  const auto dense = test::assemble_dense(rays, scene, cfg);
  const std::size_t n = scene.param_count();

  DVec b, diag;
  gn_rhs(rays, scene, cfg, b);
  jacobi_diagonal(rays, scene, cfg, diag);
  const Eigen::VectorXd b_want = -dense.jacobian.transpose() * dense.residuals;
  const Eigen::VectorXd d_want =
      (dense.jacobian.transpose() * dense.jacobian).diagonal();
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(close_rel(b[j], b_want(j), 1e-6, 1e-12));
    CHECK(close_rel(diag[j], d_want(j), 1e-6, 1e-12));
  }
}

TEST_CASE("jtj_apply on p = 0 returns 0 and is symmetric PSD") {
  Scene scene = test::random_scene({4, 4, 4}, 1, 4, 33);
  SystemConfig cfg = plain_cfg();
  const auto rays = test::random_rays(scene, 30, 34);
  const std::size_t n = scene.param_count();

  DVec zero(n, 0.0), out;
  jtj_apply(rays, scene, cfg, zero, out);
  for (double v : out) CHECK(v == 0.0);

  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    DVec p(n), q(n), ap, aq;
    for (auto& v : p) v = u(rng);
    for (auto& v : q) v = u(rng);
    jtj_apply(rays, scene, cfg, p, ap);
    jtj_apply(rays, scene, cfg, q, aq);
    const double paq = kernels::dot(p.data(), aq.data(), n);
    const double qap = kernels::dot(q.data(), ap.data(), n);
    CHECK(close_rel(paq, qap, 1e-6, 1e-10));
    CHECK(kernels::dot(p.data(), ap.data(), n) >= -1e-8);
  }
}

TEST_CASE("rank-one identity for a single active residual") {
  // One sample, lambda = 0, only the red channel carries signal; A p must
  // equal sum_rows g (g . p) with the green/blue rows identically zero.
  Scene scene = two_cube_scene();
  float* cell = scene.params().data() + scene.cell_base(0, 0, 0);
  cell[0] = 0.7f;
  cell[kSigmaChannel] = 0.9f;

  Ray ray = center_line_ray();
  SystemConfig cfg;
  cfg.fwd.background = Vec3(0, 0, 0);
  cfg.fwd.lambda_aux = 0.0;
  cfg.fwd.step_len = 1.0;
  std::vector<Ray> rays = {ray};

  const auto rows = test::impl_residual_rows(ray, scene, cfg);
  const std::size_t n = scene.param_count();
  double g_norm = 0, b_norm = 0;
  for (std::size_t j = 0; j < n; ++j) {
    g_norm += std::abs(rows[1][j]);
    b_norm += std::abs(rows[2][j]);
  }
  CHECK(g_norm == 0.0);
  CHECK(b_norm == 0.0);

  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DVec p(n);
  for (auto& v : p) v = u(rng);
  DVec ap;
  jtj_apply(rays, scene, cfg, p, ap);
  const double dot = kernels::dot(rows[0].data(), p.data(), n);
  for (std::size_t j = 0; j < n; ++j)
    CHECK(close_rel(ap[j], rows[0][j] * dot, 1e-9, 1e-12));
}

TEST_CASE("diagonal of a single residual is the squared gradient") {
  Scene scene = two_cube_scene();
  float* cell = scene.params().data() + scene.cell_base(0, 0, 0);
  cell[0] = 0.7f;
  cell[kSigmaChannel] = 0.9f;
  Ray ray = center_line_ray();
  SystemConfig cfg;
  cfg.fwd.background = Vec3(0, 0, 0);
  cfg.fwd.lambda_aux = 0.0;
  cfg.fwd.step_len = 1.0;
  std::vector<Ray> rays = {ray};

  const auto rows = test::impl_residual_rows(ray, scene, cfg);
  DVec diag;
  jacobi_diagonal(rays, scene, cfg, diag);
  for (std::size_t j = 0; j < diag.size(); ++j)
    CHECK(close_rel(diag[j], rows[0][j] * rows[0][j], 1e-9, 1e-15));
}

TEST_CASE("jacobi diagonal with no rays is all zeros") {
  Scene scene = test::random_scene({4, 4, 4}, 1, 4, 55);
  SystemConfig cfg = plain_cfg();
  std::vector<Ray> rays;
  DVec diag;
  jacobi_diagonal(rays, scene, cfg, diag);
  REQUIRE(diag.size() == scene.param_count());
  for (double v : diag) CHECK(v == 0.0);
}

TEST_CASE("gn_build fuses objective, rhs and diagonal consistently") {
  Scene scene = test::random_scene({5, 5, 5}, 1, 4, 66);
  SystemConfig cfg = plain_cfg();
  cfg.fwd.deterministic = true;
  const auto rays = test::random_rays(scene, 40, 67);
  GnBuild build;
  gn_build(rays, scene, cfg, build);
  CHECK(build.objective ==
        doctest::Approx(objective(rays, scene, cfg.fwd)).epsilon(1e-12));
  DVec b, diag;
  gn_rhs(rays, scene, cfg, b);
  jacobi_diagonal(rays, scene, cfg, diag);
  for (std::size_t j = 0; j < b.size(); ++j) {
    CHECK(build.rhs[j] == doctest::Approx(b[j]).epsilon(1e-12));
    CHECK(build.diag[j] == doctest::Approx(diag[j]).epsilon(1e-12));
  }
}

TEST_CASE("color-only mode freezes every sigma column") {
  Scene scene = test::random_scene({4, 4, 4}, 1, 4, 88);
  SystemConfig cfg = plain_cfg();
  cfg.color_only = true;
  const auto rays = test::random_rays(scene, 20, 89);
  const auto dense = test::assemble_dense(rays, scene, cfg);
  DVec b, diag;
  gn_rhs(rays, scene, cfg, b);
  jacobi_diagonal(rays, scene, cfg, diag);
  const Eigen::VectorXd b_want = -dense.jacobian.transpose() * dense.residuals;
  for (std::size_t j = 0; j < b.size(); ++j) {
    CHECK(close_rel(b[j], b_want(j), 1e-6, 1e-12));
    if (j % kChannels == kSigmaChannel) {
      CHECK(b[j] == 0.0);
      CHECK(diag[j] == 0.0);
    }
  }
}

TEST_CASE("backward sweep runs without allocating") {
  Scene scene = test::random_scene({6, 6, 6}, 1, 8, 77);
  const auto rays = test::random_rays(scene, 4, 78);
  RaySampleList samples;
  RayEval eval;
  SamplePartials parts;
  // Warm up the scratch capacity.
  for (const Ray& ray : rays) {
    build_samples(scene, ray, {}, 0.0, samples);
    forward_eval(samples, scene, eval);
    backward_partials(samples, eval, parts);
  }
  g_allocations.store(0);
  g_count_allocations.store(true);
  for (const Ray& ray : rays) {
    build_samples(scene, ray, {}, 0.0, samples);
    forward_eval(samples, scene, eval);
    backward_partials(samples, eval, parts);
  }
  g_count_allocations.store(false);
  CHECK(g_allocations.load() == 0);
}
