// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deepgi/train/trainer.hpp"

namespace deepgi::train {

enum class ExperimentKind { epochs, dataset_size, base_layer };

std::string_view experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view name);

struct ExperimentConfig {
  /// Shared training settings; `out_dir` receives one subdirectory per run
  /// plus curves.csv (and timing.csv for base_layer).
  TrainConfig train;
  /// dataset_size: nested training-set sizes, smallest first.
  std::vector<int> sizes{20, 40, 80};
  /// base_layer: generator widths to compare.
  std::vector<int> base_layers{16, 32, 64};
  /// base_layer timing: frames timed, repeats per frame, path-tracer spp.
  int timing_frames = 4;
  int timing_repeats = 5;
  int timing_spp = 64;

  void validate(ExperimentKind kind) const;
};

struct CurvePoint {
  std::string series;  // e.g. "all", "n=40", "K=32"
  int epoch = 0;
  double val_mse = 0.0;
  double val_ssim = 0.0;
  double test_mse = 0.0;
  double test_ssim = 0.0;
};

struct TimingRow {
  int base_layer = 0;
  std::int64_t parameters = 0;
  double infer_seconds = 0.0;  // median per frame
  double pathtrace_seconds = 0.0;  // median per frame, same frames and resolution

  double speedup() const { return pathtrace_seconds / infer_seconds; }
};

struct ExperimentResult {
  ExperimentKind kind = ExperimentKind::epochs;
  std::vector<CurvePoint> curves;
  std::vector<TimingRow> timing;

  /// Last point of a series.
  const CurvePoint& final_point(std::string_view series) const;
  std::string curves_csv() const;
  std::string timing_csv() const;
};

/// Runs the sweep, writing curves.csv (and timing.csv) under out_dir.
/// Curves report the test split, falling back to val when there is none.
ExperimentResult run_experiment(ExperimentKind kind, const ExperimentConfig& config);

/// Median wall time of one eval-mode forward of a 1-frame batch.
double time_inference(const nn::Generator& generator, std::span<const Sample> frames, int repeats);

}  // namespace deepgi::train
