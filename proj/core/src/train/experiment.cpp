// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/train/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"

namespace deepgi::train {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::filesystem::path dataset_dir(const std::filesystem::path& dataset) {
  return std::filesystem::is_directory(dataset) ? dataset : dataset.parent_path();
}

std::vector<Sample> eval_split(const TrainConfig& config, render::Split& which) {
  const auto manifest = render::read_manifest(config.dataset);
  which = manifest.count(render::Split::test) > 0 ? render::Split::test : render::Split::val;
  auto frames = load_split(dataset_dir(config.dataset), manifest, which);
  if (frames.empty()) throw ConfigError("experiment: dataset has neither test nor val frames");
  return frames;
}

// Trains one configuration and records val/test metrics after every epoch.
void train_series(const std::string& series, TrainConfig config, std::span<const Sample> eval,
                  ExperimentResult& result, std::unique_ptr<nn::Generator>* keep = nullptr) {
  config.out_dir = config.out_dir / series;
  train(config, [&](const EpochStats& s, Trainer& t) {
    const auto m = validate(t.generator(), eval);
    result.curves.push_back({series, s.epoch, s.val_mse, s.val_ssim, m.mse, m.ssim});
  });
  if (keep) *keep = std::make_unique<nn::Generator>(nn::load_generator(config.out_dir / "final.dicp"));
}

}  // namespace

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::epochs:
      return "epochs";
    case ExperimentKind::dataset_size:
      return "dataset_size";
    case ExperimentKind::base_layer:
      return "base_layer";
  }
  return "?";
}

ExperimentKind parse_experiment(std::string_view name) {
  for (auto k : {ExperimentKind::epochs, ExperimentKind::dataset_size, ExperimentKind::base_layer}) {
    if (experiment_name(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "' (expected epochs, dataset_size or base_layer)");
}

void ExperimentConfig::validate(ExperimentKind kind) const {
  train.validate();
  if (kind == ExperimentKind::dataset_size) {
    if (sizes.empty()) throw ConfigError("experiment: no dataset sizes");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < 1 || (i > 0 && sizes[i] <= sizes[i - 1])) {
        throw ConfigError("experiment: dataset sizes must be positive and strictly increasing");
      }
    }
  }
  if (kind == ExperimentKind::base_layer) {
    if (base_layers.empty()) throw ConfigError("experiment: no base layers");
    for (int k : base_layers) {
      if (k < 1) throw ConfigError("experiment: base layers must be >= 1");
    }
    if (timing_frames < 1 || timing_repeats < 1 || timing_spp < 1) {
      throw ConfigError("experiment: timing frames, repeats and spp must be >= 1");
    }
  }
}

const CurvePoint& ExperimentResult::final_point(std::string_view series) const {
  for (auto it = curves.rbegin(); it != curves.rend(); ++it) {
    if (it->series == series) return *it;
  }
  throw ConfigError("experiment: no series '" + std::string(series) + "'");
}

std::string ExperimentResult::curves_csv() const {
  std::string out = "series,epoch,val_mse,val_ssim,test_mse,test_ssim\n";
  char buf[256];
  for (const auto& p : curves) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.9g,%.9g,%.9g,%.9g\n", p.series.c_str(), p.epoch, p.val_mse, p.val_ssim,
                  p.test_mse, p.test_ssim);
    out += buf;
  }
  return out;
}

std::string ExperimentResult::timing_csv() const {
  std::string out = "base_layer,parameters,infer_ms,pathtrace_ms,speedup\n";
  char buf[256];
  for (const auto& t : timing) {
    std::snprintf(buf, sizeof buf, "%d,%lld,%.4f,%.4f,%.2f\n", t.base_layer, static_cast<long long>(t.parameters),
                  1e3 * t.infer_seconds, 1e3 * t.pathtrace_seconds, t.speedup());
    out += buf;
  }
  return out;
}

double time_inference(const nn::Generator& generator, std::span<const Sample> frames, int repeats) {
  if (frames.empty()) throw ConfigError("time_inference: no frames");
  const std::size_t first = 0;
  generator.predict(make_batch(frames, std::span(&first, 1)).input);  // warm-up
  std::vector<double> times;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto x = make_batch(frames, std::span(&i, 1)).input;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = Clock::now();
      generator.predict(x);
      times.push_back(seconds_since(t0));
    }
  }
  return median(std::move(times));
}

ExperimentResult run_experiment(ExperimentKind kind, const ExperimentConfig& config) {
  config.validate(kind);
  ExperimentResult result;
  result.kind = kind;
  render::Split which;
  const auto eval = eval_split(config.train, which);

  switch (kind) {
    case ExperimentKind::epochs:
      train_series("all", config.train, eval, result);
      break;
    case ExperimentKind::dataset_size:
      for (int n : config.sizes) {
        TrainConfig c = config.train;
        c.max_train_frames = n;
        train_series("n=" + std::to_string(n), c, eval, result);
      }
      break;
    case ExperimentKind::base_layer: {
      const auto manifest = render::read_manifest(config.train.dataset);
      std::vector<render::FrameRecord> timed;
      for (const auto& f : manifest.frames_in(which)) {
        if (f.kind != render::ObjectKind::mesh && static_cast<int>(timed.size()) < config.timing_frames) {
          timed.push_back(f);
        }
      }
      if (timed.empty()) throw ConfigError("experiment: no frames to time");
      std::vector<Sample> timed_samples;
      for (const auto& f : timed) timed_samples.push_back(load_sample(dataset_dir(config.train.dataset), f));

      // The path tracer renders the same frames at the same resolution.
      std::vector<double> pt_times;
      const auto camera = render::cornell::make_camera(manifest.resolution);
      for (const auto& f : timed) {
        const auto scene = render::sweep_scene(f.kind, f.light_deg, f.rotation_deg);
        render::PathTraceOptions opt;
        opt.spp = config.timing_spp;
        opt.max_bounces = manifest.max_bounces;
        opt.seed = static_cast<std::uint64_t>(f.index);
        const auto t0 = Clock::now();
        render::path_trace(scene, camera, opt);
        pt_times.push_back(seconds_since(t0));
      }
      const double pt = median(pt_times);

      for (int k : config.base_layers) {
        TrainConfig c = config.train;
        c.base_layer_K = k;
        std::unique_ptr<nn::Generator> gen;
        train_series("K=" + std::to_string(k), c, eval, result, &gen);
        result.timing.push_back({k, gen->parameter_count(), time_inference(*gen, timed_samples, config.timing_repeats), pt});
      }
      break;
    }
  }

  write_file_atomic(config.train.out_dir / "curves.csv", result.curves_csv());
  if (!result.timing.empty()) write_file_atomic(config.train.out_dir / "timing.csv", result.timing_csv());
  return result;
}

}  // namespace deepgi::train
