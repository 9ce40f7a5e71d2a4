// Copyright (c) 2026 The radgrid Authors.
// The radgrid source code is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "radgrid/checkpoint.hpp"
#include "radgrid/config.hpp"
#include "radgrid/render.hpp"
#include "radgrid/thread_pool.hpp"

namespace {

using namespace radgrid;

std::string format_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string record_line(const IterationRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "level=%d iter=%d objective=%.8e step=%.4f pcg_iters=%d "
                "seconds=%.3f stalled=%d",
                r.level, r.iteration, r.objective, r.step_scale, r.pcg_iters,
                r.seconds, r.stalled ? 1 : 0);
  std::string line = buf;
  if (!std::isnan(r.holdout_psnr)) line += " psnr=" + format_psnr(r.holdout_psnr);
  return line;
}

struct CommonOpts {
  std::string config_path;
  int threads = 0;

  AppConfig load_config() const {
    AppConfig cfg;
    if (!config_path.empty()) cfg = AppConfig::load(config_path);
    if (threads > 0) ThreadPool::global().resize(threads);
    return cfg;
  }
};

int cmd_reconstruct(const CommonOpts& common, const std::string& dataset_dir,
                    const std::string& out_path, const std::string& split,
                    const std::string& holdout_split,
                    const std::string& log_path_arg,
                    const std::string& snapshot_dir,
                    std::optional<std::uint64_t> seed,
                    std::optional<bool> deterministic,
                    std::optional<int> levels, std::optional<int> iters) {
  AppConfig app = common.load_config();
  if (seed) app.gn.rng_seed = *seed;
  if (deterministic) app.gn.deterministic = *deterministic;
  if (levels) app.gn.levels = *levels;
  if (iters) app.gn.iters_per_level = *iters;

  const Dataset train = load_dataset(dataset_dir, split, app.dataset_options());
  std::optional<Dataset> holdout;
  if (app.holdout_mode != HoldoutMode::kNone)
    holdout = load_dataset(dataset_dir, holdout_split, app.dataset_options());

  const std::string log_path =
      log_path_arg.empty() ? out_path + ".log" : log_path_arg;
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot open log file " + log_path);

  const GnConfig gn = app.solver_config();
  SolveHooks hooks;
  hooks.holdout_mode = app.holdout_mode;
  if (holdout) {
    hooks.holdout_metric = [&](const Scene& scene) {
      RenderOptions ropts{true, gn.background};
      double sum = 0.0;
      for (std::size_t i = 0; i < holdout->size(); ++i) {
        const ImageF r = to_display(
            render_view(scene, holdout->cameras[i], ropts), app.srgb);
        sum += psnr(r, to_display(holdout->images[i], app.srgb));
      }
      return sum / static_cast<double>(holdout->size());
    };
  }
  hooks.on_iteration = [&](const IterationRecord& r) {
    const std::string line = record_line(r);
    log << line << "\n";
    log.flush();
    std::cout << line << "\n";
  };
  if (!snapshot_dir.empty()) {
    std::filesystem::create_directories(snapshot_dir);
    hooks.on_level_end = [&](int level, const Scene& scene) {
      save_checkpoint(scene, std::filesystem::path(snapshot_dir) /
                                 ("level_" + std::to_string(level) + ".ckpt"));
    };
  }

  auto [scene, report] = solve_hierarchy(train, gn, hooks);
  save_checkpoint(scene, out_path);
  report.checkpoint_path = out_path;
  std::cout << "checkpoint written to " << out_path << "\n";
  return 0;
}

RenderOptions render_opts(const AppConfig& app, bool no_threshold) {
  RenderOptions opts;
  opts.threshold = !no_threshold;
  opts.background = app.linear_background();
  return opts;
}

int cmd_render(const CommonOpts& common, const std::string& checkpoint_path,
               const std::string& out_dir, const std::string& dataset_dir,
               const std::string& split, int index, const std::string& pose_path,
               bool no_threshold) {
  const AppConfig app = common.load_config();
  const Scene scene = load_checkpoint(checkpoint_path);
  std::filesystem::create_directories(out_dir);
  const RenderOptions opts = render_opts(app, no_threshold);

  std::vector<Camera> cams;
  std::vector<std::string> names;
  if (!pose_path.empty()) {
    std::ifstream in(pose_path);
    if (!in) throw std::runtime_error("cannot open pose file " + pose_path);
    nlohmann::json doc;
    in >> doc;
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = doc.at("transform_matrix")[r][c];
    const int w = doc.at("width").get<int>();
    const int h = doc.at("height").get<int>();
    cams.emplace_back(m, focal_from_angle_x(doc.at("camera_angle_x"), w), w, h);
    names.push_back(std::filesystem::path(pose_path).stem().string());
  } else if (!dataset_dir.empty()) {
    const Dataset views = load_dataset(dataset_dir, split, app.dataset_options());
    for (std::size_t i = 0; i < views.size(); ++i) {
      if (index >= 0 && static_cast<int>(i) != index) continue;
      cams.push_back(views.cameras[i]);
      names.push_back(views.names[i]);
    }
    if (cams.empty()) throw std::runtime_error("render: view index out of range");
  } else {
    throw std::runtime_error("render: need --dataset or --pose");
  }

  for (std::size_t i = 0; i < cams.size(); ++i) {
    const ImageF img = render_view(scene, cams[i], opts);
    const auto out = std::filesystem::path(out_dir) / (names[i] + ".png");
    write_image(out, img, app.srgb);
    std::cout << out.string() << "\n";
  }
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint_path,
             const std::string& dataset_dir, const std::string& split,
             bool masked, bool no_threshold) {
  const AppConfig app = common.load_config();
  const Scene scene = load_checkpoint(checkpoint_path);
  const Dataset views = load_dataset(dataset_dir, split, app.dataset_options());
  if (views.size() == 0) throw std::runtime_error("eval: empty split");
  const RenderOptions opts = render_opts(app, no_threshold);

  double sum = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ImageF rendered =
        to_display(render_view(scene, views.cameras[i], opts), app.srgb);
    const ImageF target = to_display(views.images[i], app.srgb);
    std::optional<std::vector<std::uint8_t>> mask;
    if (masked) mask = foreground_mask(scene, views.cameras[i]);
    const double v = psnr(rendered, target, mask ? &*mask : nullptr);
    sum += v;
    std::cout << views.names[i] << " " << format_psnr(v) << "\n";
  }
  std::cout << "mean " << format_psnr(sum / static_cast<double>(views.size()))
            << "\n";
  return 0;
}

int cmd_info(const std::string& checkpoint_path) {
  const CheckpointHeader h = inspect_checkpoint(checkpoint_path);
  std::cout << "version " << h.version << "\n";
  std::cout << "grid " << h.dims.x() << "x" << h.dims.y() << "x" << h.dims.z()
            << "\n";
  std::cout << "aabb min " << h.aabb.min.transpose() << "\n";
  std::cout << "aabb max " << h.aabb.max.transpose() << "\n";
  std::cout << "env_layers " << h.layers.size() << "\n";
  for (std::size_t i = 0; i < h.layers.size(); ++i)
    std::cout << "  layer " << i << " face_res " << h.layers[i].face_res
              << " half_extent " << h.layers[i].half_extent << "\n";
  std::cout << "params " << h.param_count() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explicit radiance-field reconstruction from posed images"};
  app.require_subcommand(1);

  CommonOpts common;

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct",
                                 "Reconstruct a scene from a posed-image dataset");
  std::string dataset_dir, out_path, split = "train", holdout_split = "test";
  std::string log_path, snapshot_dir;
  std::optional<std::uint64_t> seed;
  std::optional<bool> deterministic;
  std::optional<int> levels_override, iters_override;
  rec->add_option("--dataset", dataset_dir, "Dataset root directory")->required();
  rec->add_option("--out", out_path, "Output checkpoint path")->required();
  rec->add_option("--config", common.config_path, "JSON config file");
  rec->add_option("--split", split, "Training split (default train)");
  rec->add_option("--holdout-split", holdout_split,
                  "Split for holdout PSNR (default test)");
  rec->add_option("--log", log_path, "Iteration log path (default <out>.log)");
  rec->add_option("--snapshot-dir", snapshot_dir, "Per-level checkpoint directory");
  rec->add_option("--seed", seed, "Override RNG seed");
  rec->add_option("--deterministic", deterministic,
                  "Override deterministic mode (0/1)");
  rec->add_option("--levels", levels_override, "Override hierarchy level count");
  rec->add_option("--iters", iters_override, "Override iterations per level");
  rec->add_option("--threads", common.threads, "Worker pool size");

  // render
  auto* ren = app.add_subcommand("render", "Render views from a checkpoint");
  std::string checkpoint_path, out_dir, pose_path, render_split = "test";
  int view_index = -1;
  bool no_threshold = false;
  ren->add_option("--checkpoint", checkpoint_path, "Scene checkpoint")->required();
  ren->add_option("--out-dir", out_dir, "Output directory")->required();
  ren->add_option("--dataset", dataset_dir, "Dataset root for camera poses");
  ren->add_option("--split", render_split, "Dataset split (default test)");
  ren->add_option("--index", view_index, "Render a single view by index");
  ren->add_option("--pose", pose_path,
                  "Explicit camera file (camera_angle_x, width, height, "
                  "transform_matrix)");
  ren->add_flag("--no-threshold", no_threshold,
                "Disable the converged-scene opacity threshold");
  ren->add_option("--config", common.config_path, "JSON config file");
  ren->add_option("--threads", common.threads, "Worker pool size");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate holdout PSNR for a checkpoint");
  bool masked = false;
  std::string eval_split = "test";
  ev->add_option("--checkpoint", checkpoint_path, "Scene checkpoint")->required();
  ev->add_option("--dataset", dataset_dir, "Dataset root")->required();
  ev->add_option("--split", eval_split, "Dataset split (default test)");
  ev->add_flag("--masked", masked, "Apply the foreground mask");
  ev->add_flag("--no-threshold", no_threshold,
               "Disable the opacity threshold when rendering");
  ev->add_option("--config", common.config_path, "JSON config file");
  ev->add_option("--threads", common.threads, "Worker pool size");

  // info
  auto* inf = app.add_subcommand("info", "Print checkpoint header");
  inf->add_option("--checkpoint", checkpoint_path, "Scene checkpoint")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (rec->parsed())
      return cmd_reconstruct(common, dataset_dir, out_path, split, holdout_split,
                             log_path, snapshot_dir, seed, deterministic,
                             levels_override, iters_override);
    if (ren->parsed())
      return cmd_render(common, checkpoint_path, out_dir, dataset_dir,
                        render_split, view_index, pose_path, no_threshold);
    if (ev->parsed())
      return cmd_eval(common, checkpoint_path, dataset_dir, eval_split, masked,
                      no_threshold);
    if (inf->parsed()) return cmd_info(checkpoint_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
