// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "radgrid/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "radgrid/thread_pool.hpp"

namespace radgrid {

void SamplePartials::reset(std::size_t count) {
  d_color.assign(count, 0.0);
  d_sigma.assign(count, Vec3::Zero());
  d_tgrid.assign(count, 0.0);
  n = static_cast<int>(count);
}

void backward_partials(const RaySampleList& samples, const RayEval& eval,
                       SamplePartials& out) {
  out.reset(samples.samples.size());
  // V is the optical depth of the prefix before sample i; initialized to
  // the full sum and peeled off one term per step of the backward sweep.
  double v = 0.0;
  for (int i = 0; i < eval.n; ++i)
    v += eval.sigma[i] * samples.samples[i].delta;
  Vec3 g = Vec3::Zero();
  for (int i = eval.n - 1; i >= 0; --i) {
    const RaySample& s = samples.samples[i];
    const double delta = s.delta;
    v -= eval.sigma[i] * delta;
    const double ev = std::exp(-v);
    out.d_color[i] = ev * eval.alpha[i];
    out.d_sigma[i] = ev * delta * eval.expneg[i] * eval.color[i] - delta * g;
    g += (ev * eval.alpha[i]) * eval.color[i];
    if (s.kind == 0) out.d_tgrid[i] = -delta * eval.t_grid;
  }
}

void backward_partials(const RaySampleList& samples, const Scene& scene,
                       SamplePartials& out) {
  RayEval eval;
  forward_eval(samples, scene, eval);
  backward_partials(samples, eval, out);
}

void scatter(std::span<const double> per_sample, const RaySampleList& samples,
             int channel, double weight, DVec& out) {
  if (per_sample.size() != samples.samples.size())
    throw std::invalid_argument("scatter: one partial per sample required");
  if (weight == 0.0) return;
  for (std::size_t i = 0; i < per_sample.size(); ++i) {
    const RaySample& s = samples.samples[i];
    const double v = weight * per_sample[i];
    for (int k = 0; k < s.corners; ++k) {
      const std::size_t slot = s.base[k] + channel;
      if (slot >= out.size()) throw std::out_of_range("scatter: slot out of range");
      out[slot] += s.w[k] * v;
    }
  }
}

namespace {

inline double gather_d(const double* p, const RaySample& s, int channel) {
  double acc = 0.0;
  for (int i = 0; i < s.corners; ++i) acc += s.w[i] * p[s.base[i] + channel];
  return acc;
}

struct RayScratch {
  RaySampleList samples;
  RayEval eval;
  SamplePartials partials;
  // (cell base, per-residual gradient sums) merged by base for the diagonal
  struct DiagEntry {
    std::uint32_t base;
    double dc, ds0, ds1, ds2, dtg;
  };
  std::vector<DiagEntry> entries;
};

// out += weight * grad r_ch for one color residual.
void scatter_color_grad(const RayScratch& rs, int ch, double weight,
                        bool color_only, double* out) {
  const auto& list = rs.samples.samples;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const RaySample& s = list[i];
    const double vc = weight * rs.partials.d_color[i];
    const double vs = color_only ? 0.0 : weight * rs.partials.d_sigma[i][ch];
    for (int k = 0; k < s.corners; ++k) {
      out[s.base[k] + ch] += s.w[k] * vc;
      if (!color_only) out[s.base[k] + kSigmaChannel] += s.w[k] * vs;
    }
  }
}

double dot_color_grad(const RayScratch& rs, int ch, bool color_only,
                      const double* p) {
  const auto& list = rs.samples.samples;
  double acc = 0.0;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const RaySample& s = list[i];
    acc += rs.partials.d_color[i] * gather_d(p, s, ch);
    if (!color_only)
      acc += rs.partials.d_sigma[i][ch] * gather_d(p, s, kSigmaChannel);
  }
  return acc;
}

// Auxiliary residual touches only grid sigma slots, through the chain
// factor dL/dT.
void scatter_aux_grad(const RayScratch& rs, double chain, double weight,
                      double* out) {
  const double w = chain * weight;
  if (w == 0.0) return;
  for (int i = 0; i < rs.samples.n_grid; ++i) {
    const RaySample& s = rs.samples.samples[i];
    const double v = w * rs.partials.d_tgrid[i];
    for (int k = 0; k < s.corners; ++k)
      out[s.base[k] + kSigmaChannel] += s.w[k] * v;
  }
}

double dot_aux_grad(const RayScratch& rs, double chain, const double* p) {
  if (chain == 0.0) return 0.0;
  double acc = 0.0;
  for (int i = 0; i < rs.samples.n_grid; ++i) {
    const RaySample& s = rs.samples.samples[i];
    acc += rs.partials.d_tgrid[i] * gather_d(p, s, kSigmaChannel);
  }
  return chain * acc;
}

// diag[j] += (dr/dx_j)^2 for every residual of this ray. Footprints of
// neighbouring samples overlap, so per-slot gradients must be summed before
// squaring; entries are merged by cell base first.
void accumulate_diag(RayScratch& rs, double chain, bool color_only,
                     double* diag) {
  auto& entries = rs.entries;
  entries.clear();
  const auto& list = rs.samples.samples;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const RaySample& s = list[i];
    const double dc = rs.partials.d_color[i];
    const Vec3& ds = rs.partials.d_sigma[i];
    const double dtg = chain * rs.partials.d_tgrid[i];
    for (int k = 0; k < s.corners; ++k)
      entries.push_back({s.base[k], s.w[k] * dc, s.w[k] * ds[0], s.w[k] * ds[1],
                         s.w[k] * ds[2], s.w[k] * dtg});
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.base < b.base; });
  std::size_t i = 0;
  while (i < entries.size()) {
    RayScratch::DiagEntry m = entries[i];
    std::size_t j = i + 1;
    for (; j < entries.size() && entries[j].base == m.base; ++j) {
      m.dc += entries[j].dc;
      m.ds0 += entries[j].ds0;
      m.ds1 += entries[j].ds1;
      m.ds2 += entries[j].ds2;
      m.dtg += entries[j].dtg;
    }
    // d_color is channel-symmetric: each color residual contributes the
    // same squared partial to its own channel's slot.
    diag[m.base + 0] += m.dc * m.dc;
    diag[m.base + 1] += m.dc * m.dc;
    diag[m.base + 2] += m.dc * m.dc;
    if (!color_only)
      diag[m.base + kSigmaChannel] +=
          m.ds0 * m.ds0 + m.ds1 * m.ds1 + m.ds2 * m.ds2 + m.dtg * m.dtg;
    i = j;
  }
}

enum PassKind { kRhs, kDiag, kJtj, kBuild };

struct PassOutputs {
  DVec* vec_out = nullptr;        // rhs / diag / jtj target
  DVec* diag_out = nullptr;       // gn_build only
  const DVec* p_in = nullptr;     // jtj only
  std::vector<double>* contrib = nullptr;  // per-ray squared residuals
};

void ray_pass(std::span<const Ray> rays, const Scene& scene,
              const SystemConfig& cfg, PassKind pass, const PassOutputs& io,
              AccumScratch* scratch) {
  const std::size_t n_params = scene.param_count();
  const int n = static_cast<int>(rays.size());
  constexpr int kChunk = 512;
  const int n_chunks = (n + kChunk - 1) / kChunk;
  ThreadPool& pool = ThreadPool::global();
  const int workers = pool.size();

  AccumScratch local;
  AccumScratch& acc = scratch ? *scratch : local;
  const int n_buffers = (pass == kBuild) ? 2 * workers : workers;
  acc.per_worker.resize(n_buffers);
  for (auto& buf : acc.per_worker) buf.assign(n_params, 0.0);

  std::vector<RayScratch> ray_scratch(workers);

  pool.run_chunks(n_chunks, [&](int chunk, int worker) {
    RayScratch& rs = ray_scratch[worker];
    double* out = acc.per_worker[worker].data();
    double* diag = (pass == kBuild) ? acc.per_worker[workers + worker].data()
                                    : nullptr;
    const int lo = chunk * kChunk;
    const int hi = std::min(n, lo + kChunk);
    for (int i = lo; i < hi; ++i) {
      const Ray& ray = rays[i];
      build_samples(scene, ray, cfg.fwd.jitter, cfg.fwd.step_len, rs.samples);
      PixelResiduals res =
          ray_residuals(ray, rs.samples, scene, cfg.fwd, rs.eval);
      if (io.contrib) (*io.contrib)[i] = res.sum_sq();
      if (rs.samples.samples.empty()) continue;
      backward_partials(rs.samples, rs.eval, rs.partials);
      const double chain = aux_chain(rs.eval.t_grid, cfg.fwd.lambda_aux);
      switch (pass) {
        case kRhs:
          for (int ch = 0; ch < 3; ++ch)
            scatter_color_grad(rs, ch, -res.color[ch], cfg.color_only, out);
          if (!cfg.color_only) scatter_aux_grad(rs, chain, -res.aux, out);
          break;
        case kDiag:
          accumulate_diag(rs, chain, cfg.color_only, out);
          break;
        case kJtj: {
          const double* p = io.p_in->data();
          for (int ch = 0; ch < 3; ++ch) {
            const double q = dot_color_grad(rs, ch, cfg.color_only, p);
            scatter_color_grad(rs, ch, q, cfg.color_only, out);
          }
          if (!cfg.color_only) {
            const double q = dot_aux_grad(rs, chain, p);
            scatter_aux_grad(rs, chain, q, out);
          }
          break;
        }
        case kBuild:
          for (int ch = 0; ch < 3; ++ch)
            scatter_color_grad(rs, ch, -res.color[ch], cfg.color_only, out);
          if (!cfg.color_only) scatter_aux_grad(rs, chain, -res.aux, out);
          accumulate_diag(rs, chain, cfg.color_only, diag);
          break;
      }
    }
  });

  // Fixed-order reduction over the per-worker buffers.
  auto reduce = [&](DVec& dst, int first) {
    dst.assign(n_params, 0.0);
    for (int w = 0; w < workers; ++w) {
      const double* src = acc.per_worker[first + w].data();
      double* d = dst.data();
      for (std::size_t j = 0; j < n_params; ++j) d[j] += src[j];
    }
  };
  if (io.vec_out) reduce(*io.vec_out, 0);
  if (io.diag_out) reduce(*io.diag_out, workers);
}

}  // namespace

void gn_rhs(std::span<const Ray> rays, const Scene& scene,
            const SystemConfig& cfg, DVec& b, AccumScratch* scratch) {
  PassOutputs io;
  io.vec_out = &b;
  ray_pass(rays, scene, cfg, kRhs, io, scratch);
}

void jacobi_diagonal(std::span<const Ray> rays, const Scene& scene,
                     const SystemConfig& cfg, DVec& diag, AccumScratch* scratch) {
  PassOutputs io;
  io.vec_out = &diag;
  ray_pass(rays, scene, cfg, kDiag, io, scratch);
}

void jtj_apply(std::span<const Ray> rays, const Scene& scene,
               const SystemConfig& cfg, const DVec& p, DVec& out,
               AccumScratch* scratch) {
  if (p.size() != scene.param_count())
    throw std::invalid_argument("jtj_apply: p sized to scene required");
  PassOutputs io;
  io.vec_out = &out;
  io.p_in = &p;
  ray_pass(rays, scene, cfg, kJtj, io, scratch);
}

void gn_build(std::span<const Ray> rays, const Scene& scene,
              const SystemConfig& cfg, GnBuild& out, AccumScratch* scratch) {
  std::vector<double> contrib(rays.size(), 0.0);
  PassOutputs io;
  io.vec_out = &out.rhs;
  io.diag_out = &out.diag;
  io.contrib = &contrib;
  ray_pass(rays, scene, cfg, kBuild, io, scratch);
  if (cfg.fwd.deterministic) std::sort(contrib.begin(), contrib.end());
  double sum = 0.0;
  for (double c : contrib) sum += c;
  out.objective = 0.5 * sum;
}

}  // namespace radgrid
