// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deepgi/nn/checkpoint.hpp"
#include "deepgi/train/frames.hpp"

namespace deepgi::train {

struct TrainConfig {
  int epochs = 50;
  int batch_size = 4;
  float lr = 2e-4f;
  float dropout_p = 0.5f;
  float lambda_l1 = 100.0f;
  int base_layer_K = 64;
  /// Generator depth; 0 picks log2 of the dataset resolution.
  int depth = 0;
  int disc_k = 64;
  std::uint64_t seed = 0;
  /// Checkpoint every this many epochs (0: only at the end).
  int checkpoint_interval = 10;
  float real_label = 1.0f;
  float fake_label = 0.0f;
  /// Use at most this many training frames (0: all). Subsets are nested:
  /// a smaller limit always picks a prefix of a larger one.
  int max_train_frames = 0;
  std::filesystem::path dataset;
  std::filesystem::path out_dir;
  /// Checkpoint to continue from; the run then ends at `epochs` in total.
  std::filesystem::path resume_from;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double g_loss = 0.0;
  double d_loss = 0.0;
  double l1 = 0.0;
  double val_mse = 0.0;
  double val_ssim = 0.0;
  double seconds = 0.0;
};

struct StepLosses {
  double g_loss = 0.0;  // g_adv + lambda * l1
  double g_adv = 0.0;
  double l1 = 0.0;
  double d_loss = 0.0;
};

struct GeneratorLoss {
  Tensor total;
  Tensor adversarial;
  Tensor l1;
};

/// BCE(d_fake, real_label) + lambda * L1(fake, target).
GeneratorLoss generator_loss(const Tensor& d_fake, const Tensor& fake, const Tensor& target, float lambda_l1,
                             float real_label = 1.0f);
/// 0.5 * [BCE(d_real, real_label) + BCE(d_fake, fake_label)].
Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake, float real_label = 1.0f,
                          float fake_label = 0.0f);

struct Metrics {
  double mse = 0.0;
  double ssim = 0.0;
};

using Predictor = std::function<Tensor(const Tensor& input)>;

/// Mean MSE and SSIM over `samples` in display space. The predictor sees
/// N x 12 x S x S batches; means are order independent.
Metrics validate(const Predictor& predict, std::span<const Sample> samples);
/// Eval-mode generator (dropout off, running batch-norm statistics).
Metrics validate(const nn::Generator& generator, std::span<const Sample> samples);

/// Generator and discriminator with their optimizers and the position in the
/// training schedule.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const nn::GeneratorConfig& gen, const nn::DiscriminatorConfig& disc);

  /// One discriminator update (generated images detached) followed by one
  /// generator update. Throws NumericError on a non-finite loss.
  StepLosses train_step(const Tensor& input, const Tensor& target);

  /// The pieces of train_step, exposed for testing. `generate` runs the
  /// train-mode generator with this step's dropout seed; the two updates
  /// leave the other network's parameters untouched. d_loss is left 0 in
  /// the generator step's result.
  Tensor generate(const Tensor& input);
  double discriminator_step(const Tensor& input, const Tensor& target, const Tensor& fake);
  StepLosses generator_step(const Tensor& input, const Tensor& target, const Tensor& fake);

  /// Shuffles with a seed derived from (seed, epoch), runs every batch
  /// (the last may be short) and bumps the epoch counter.
  EpochStats run_epoch(std::span<const Sample> train);

  nn::Checkpoint checkpoint();
  void restore(const nn::Checkpoint& checkpoint);

  nn::Generator& generator() { return gen_; }
  nn::Discriminator& discriminator() { return disc_; }
  const nn::TrainingCursor& cursor() const { return cursor_; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  nn::Generator gen_;
  nn::Discriminator disc_;
  Adam gen_adam_;
  Adam disc_adam_;
  nn::TrainingCursor cursor_;
};

struct TrainResult {
  std::vector<EpochStats> stats;
  std::filesystem::path final_checkpoint;
  std::int64_t steps = 0;  // train steps run by this call
};

/// Called after each epoch with the fresh stats; may run extra evaluation.
using EpochCallback = std::function<void(const EpochStats&, Trainer&)>;

/// Full loop over the dataset's train split, validating on the val split
/// (or test when val is empty) after every epoch. Writes stats.csv,
/// ckpt_eNNNN.dicp at the checkpoint interval and final.dicp to out_dir.
TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch = {});

/// The first `limit` frames of a seeded permutation (all frames when limit
/// is 0 or covers the set), so smaller subsets nest inside larger ones.
std::vector<render::FrameRecord> training_subset(std::vector<render::FrameRecord> frames, int limit,
                                                std::uint64_t seed);

std::string stats_csv_header();
std::string stats_csv_row(const EpochStats& s);

struct InferenceRequest {
  std::filesystem::path checkpoint;
  std::filesystem::path depth, normal, diffuse, direct;
  std::filesystem::path ground_truth;  // optional
  std::filesystem::path output;        // predicted radiance, DIB1
  std::filesystem::path preview;       // optional PPM: direct | predicted | ground truth
};

/// Runs the generator on one frame's buffers; returns the predicted radiance.
Image infer(const InferenceRequest& request);
Image infer(const nn::Generator& generator, const Sample& sample);

}  // namespace deepgi::train
