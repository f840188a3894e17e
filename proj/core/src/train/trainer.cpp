// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"
#include "deepgi/common/random.hpp"
#include "deepgi/metrics/metrics.hpp"
#include "deepgi/render/raster.hpp"

namespace deepgi::train {
namespace {

constexpr std::size_t kEvalBatch = 8;
constexpr std::uint64_t kShuffleStream = 0x5f;
constexpr std::uint64_t kDropoutStream = 0xd0;
constexpr std::uint64_t kSubsetStream = 0x5b;

// Fisher-Yates with our own RNG so the order is the same on every platform.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
  return p;
}

double sorted_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

int log2_exact(int v) {
  int d = 0;
  while ((1 << d) < v) ++d;
  return (1 << d) == v ? d : -1;
}

void check_finite(double v, const char* what, std::uint64_t step) {
  if (!std::isfinite(v)) {
    throw NumericError(std::string("non-finite ") + what + " at step " + std::to_string(step));
  }
}

std::filesystem::path epoch_checkpoint(const std::filesystem::path& dir, int epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "ckpt_e%04d.dicp", epoch);
  return dir / name;
}

// Turns off gradients for a parameter set until destroyed.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<Tensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Tensor> params_;
};

// Rows of an existing stats file up to and including `last_epoch`.
std::vector<std::string> kept_rows(const std::filesystem::path& csv, std::uint32_t last_epoch) {
  std::vector<std::string> rows;
  if (!std::filesystem::exists(csv)) return rows;
  const auto bytes = read_file_bytes(csv);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto epoch = std::strtoul(line.c_str(), nullptr, 10);
    if (epoch >= 1 && epoch <= last_epoch) rows.push_back(line);
  }
  return rows;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr > 0.0f)) throw ConfigError("train: lr must be positive");
  if (!(dropout_p >= 0.0f && dropout_p < 1.0f)) throw ConfigError("train: dropout_p must be in [0, 1)");
  if (!(lambda_l1 >= 0.0f)) throw ConfigError("train: lambda_l1 must be >= 0");
  if (base_layer_K < 1) throw ConfigError("train: base_layer_K must be >= 1");
  if (depth < 0) throw ConfigError("train: depth must be >= 0 (0 = from dataset)");
  if (disc_k < 1) throw ConfigError("train: disc_k must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("train: checkpoint_interval must be >= 0");
  if (max_train_frames < 0) throw ConfigError("train: max_train_frames must be >= 0");
}

GeneratorLoss generator_loss(const Tensor& d_fake, const Tensor& fake, const Tensor& target, float lambda_l1,
                             float real_label) {
  GeneratorLoss g;
  g.adversarial = bce_loss(d_fake, Tensor::full(d_fake.shape(), real_label));
  g.l1 = l1_loss(fake, target);
  g.total = add(g.adversarial, scale(g.l1, lambda_l1));
  return g;
}

Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake, float real_label, float fake_label) {
  return scale(add(bce_loss(d_real, Tensor::full(d_real.shape(), real_label)),
                   bce_loss(d_fake, Tensor::full(d_fake.shape(), fake_label))),
               0.5f);
}

Metrics validate(const Predictor& predict, std::span<const Sample> samples) {
  if (samples.empty()) throw ConfigError("validate: empty split");
  std::vector<double> mses, ssims;
  for (std::size_t first = 0; first < samples.size(); first += kEvalBatch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = first; i < std::min(samples.size(), first + kEvalBatch); ++i) idx.push_back(i);
    const auto batch = make_batch(samples, idx);
    const Tensor out = predict(batch.input);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const auto report =
          metrics::compare(to_display(out, static_cast<std::int64_t>(n)), to_display(batch.target, static_cast<std::int64_t>(n)));
      mses.push_back(report.mse);
      ssims.push_back(report.ssim);
    }
  }
  // Sorting before summing makes the means independent of frame order.
  return {sorted_mean(std::move(mses)), sorted_mean(std::move(ssims))};
}

Metrics validate(const nn::Generator& generator, std::span<const Sample> samples) {
  return validate([&](const Tensor& x) { return generator.predict(x); }, samples);
}

Trainer::Trainer(const TrainConfig& config, const nn::GeneratorConfig& gen, const nn::DiscriminatorConfig& disc)
    : config_(config),
      gen_(gen, hash_keys(config.seed, 1)),
      disc_(disc, hash_keys(config.seed, 2)),
      gen_adam_(gen_.parameters(), AdamOptions{.lr = config.lr}),
      disc_adam_(disc_.parameters(), AdamOptions{.lr = config.lr}) {
  config_.validate();
  cursor_.seed = config.seed;
}

Tensor Trainer::generate(const Tensor& input) {
  nn::GeneratorForwardOptions fwd;
  fwd.mode = Mode::train;
  fwd.seed = hash_keys(cursor_.seed, cursor_.global_step, kDropoutStream);
  fwd.dropout_p = config_.dropout_p;
  return gen_.forward(input, fwd);
}

double Trainer::discriminator_step(const Tensor& input, const Tensor& target, const Tensor& fake) {
  // Real pairs toward real_label, generated pairs toward fake_label. The fake
  // is detached so this update cannot reach the generator.
  const Tensor d_loss = discriminator_loss(disc_.forward(input, target, Mode::train),
                                           disc_.forward(input, fake.detach(), Mode::train), config_.real_label,
                                           config_.fake_label);
  const double loss = d_loss.item();
  check_finite(loss, "discriminator loss", cursor_.global_step);
  disc_adam_.zero_grad();
  d_loss.backward();
  disc_adam_.step();
  return loss;
}

StepLosses Trainer::generator_step(const Tensor& input, const Tensor& target, const Tensor& fake) {
  // Gradients flow through the discriminator to the generated image only;
  // its weights are frozen for the whole forward and backward pass.
  FreezeGuard frozen(disc_.parameters());
  const Tensor d_fake = disc_.forward(input, fake, Mode::train);
  const auto g = generator_loss(d_fake, fake, target, config_.lambda_l1, config_.real_label);
  StepLosses out;
  out.g_adv = g.adversarial.item();
  out.l1 = g.l1.item();
  // Reported in double from its terms; the float total differs by rounding only.
  out.g_loss = out.g_adv + static_cast<double>(config_.lambda_l1) * out.l1;
  check_finite(g.total.item(), "generator loss", cursor_.global_step);
  gen_adam_.zero_grad();
  g.total.backward();
  gen_adam_.step();
  return out;
}

StepLosses Trainer::train_step(const Tensor& input, const Tensor& target) {
  const Tensor fake = generate(input);
  const double d_loss = discriminator_step(input, target, fake);
  auto out = generator_step(input, target, fake);
  out.d_loss = d_loss;
  ++cursor_.global_step;
  return out;
}

EpochStats Trainer::run_epoch(std::span<const Sample> train) {
  if (train.empty()) throw ConfigError("train: empty training split");
  const auto start = std::chrono::steady_clock::now();
  const std::uint32_t epoch = cursor_.epoch + 1;
  const auto order = permutation(train.size(), hash_keys(cursor_.seed, epoch, kShuffleStream));
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  EpochStats stats;
  stats.epoch = static_cast<int>(epoch);
  std::size_t steps = 0;
  for (std::size_t first = 0; first < order.size(); first += bs) {
    const auto batch = make_batch(train, std::span(order).subspan(first, std::min(bs, order.size() - first)));
    const auto l = train_step(batch.input, batch.target);
    stats.g_loss += l.g_loss;
    stats.d_loss += l.d_loss;
    stats.l1 += l.l1;
    ++steps;
  }
  stats.g_loss /= static_cast<double>(steps);
  stats.d_loss /= static_cast<double>(steps);
  stats.l1 /= static_cast<double>(steps);
  cursor_.epoch = epoch;
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

nn::Checkpoint Trainer::checkpoint() {
  return nn::capture_checkpoint({&gen_, &disc_, &gen_adam_.state(), &disc_adam_.state()}, cursor_);
}

void Trainer::restore(const nn::Checkpoint& ck) {
  if (ck.cursor.seed != config_.seed) {
    throw ConfigError("resume: checkpoint was trained with seed " + std::to_string(ck.cursor.seed) +
                      ", run uses seed " + std::to_string(config_.seed));
  }
  nn::restore_checkpoint(ck, {&gen_, &disc_, &gen_adam_.state(), &disc_adam_.state()});
  cursor_ = ck.cursor;
}

std::vector<render::FrameRecord> training_subset(std::vector<render::FrameRecord> frames, int limit,
                                                std::uint64_t seed) {
  if (limit <= 0 || static_cast<std::size_t>(limit) >= frames.size()) return frames;
  const auto order = permutation(frames.size(), hash_keys(seed, kSubsetStream));
  std::vector<render::FrameRecord> subset;
  for (int i = 0; i < limit; ++i) subset.push_back(frames[order[static_cast<std::size_t>(i)]]);
  return subset;
}

std::string stats_csv_header() { return "epoch,g_loss,d_loss,l1,val_mse,val_ssim,seconds"; }

std::string stats_csv_row(const EpochStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f", s.epoch, s.g_loss, s.d_loss, s.l1, s.val_mse,
                s.val_ssim, s.seconds);
  return buf;
}

TrainResult train(const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (config.dataset.empty()) throw ConfigError("train: no dataset path");
  if (config.out_dir.empty()) throw ConfigError("train: no output directory");
  const auto manifest = render::read_manifest(config.dataset);
  const auto dataset_dir = std::filesystem::is_directory(config.dataset) ? config.dataset
                                                                          : config.dataset.parent_path();

  nn::GeneratorConfig gen;
  gen.base_layer_K = config.base_layer_K;
  gen.depth = config.depth > 0 ? config.depth : log2_exact(manifest.resolution);
  if (gen.depth < 1 || gen.resolution() != manifest.resolution) {
    throw ConfigError("train: dataset resolution " + std::to_string(manifest.resolution) +
                      " does not match generator depth " + std::to_string(config.depth) + " (needs 2^depth)");
  }
  nn::DiscriminatorConfig disc;
  disc.base_layer_k = config.disc_k;
  if (disc.patch_map_size(manifest.resolution) < 1) {
    throw ConfigError("train: resolution " + std::to_string(manifest.resolution) + " is too small for the discriminator");
  }

  auto train_frames = manifest.frames_in(render::Split::train);
  if (train_frames.empty()) throw ConfigError("train: dataset has no training frames");
  train_frames = training_subset(std::move(train_frames), config.max_train_frames, config.seed);
  std::vector<Sample> train_set;
  for (const auto& f : train_frames) train_set.push_back(load_sample(dataset_dir, f));
  auto val_set = load_split(dataset_dir, manifest, render::Split::val);
  if (val_set.empty()) val_set = load_split(dataset_dir, manifest, render::Split::test);
  if (val_set.empty()) throw ConfigError("train: dataset has neither val nor test frames to validate on");

  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec) throw IoError("cannot create " + config.out_dir.string() + ": " + ec.message());

  Trainer trainer(config, gen, disc);
  std::vector<std::string> rows;
  const auto csv = config.out_dir / "stats.csv";
  if (!config.resume_from.empty()) {
    trainer.restore(nn::load_checkpoint(config.resume_from));
    rows = kept_rows(csv, trainer.cursor().epoch);
  }

  TrainResult result;
  const auto start_step = trainer.cursor().global_step;
  while (trainer.cursor().epoch < static_cast<std::uint32_t>(config.epochs)) {
    const auto t0 = std::chrono::steady_clock::now();
    auto stats = trainer.run_epoch(train_set);
    const auto m = validate(trainer.generator(), val_set);
    stats.val_mse = m.mse;
    stats.val_ssim = m.ssim;
    check_finite(stats.val_mse + stats.val_ssim, "validation metric", trainer.cursor().global_step);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.stats.push_back(stats);

    rows.push_back(stats_csv_row(stats));
    std::string text = stats_csv_header() + "\n";
    for (const auto& r : rows) text += r + "\n";
    write_file_atomic(csv, text);

    // latest.dicp is rewritten every epoch so a crash costs at most one epoch.
    const auto ck = trainer.checkpoint();
    nn::save_checkpoint(config.out_dir / "latest.dicp", ck);
    if (config.checkpoint_interval > 0 && stats.epoch % config.checkpoint_interval == 0) {
      nn::save_checkpoint(epoch_checkpoint(config.out_dir, stats.epoch), ck);
    }
    if (on_epoch) on_epoch(stats, trainer);
  }
  result.final_checkpoint = config.out_dir / "final.dicp";
  nn::save_checkpoint(result.final_checkpoint, trainer.checkpoint());
  result.steps = static_cast<std::int64_t>(trainer.cursor().global_step - start_step);
  return result;
}

Image infer(const nn::Generator& generator, const Sample& sample) {
  const int s = generator.config().resolution();
  if (sample.size != s) {
    throw ShapeError("infer: checkpoint expects " + std::to_string(s) + "x" + std::to_string(s) + " buffers, got " +
                     std::to_string(sample.size) + "x" + std::to_string(sample.size));
  }
  const auto x = Tensor::from_data({1, kInputChannels, s, s}, sample.input);
  return to_radiance(generator.predict(x));
}

Image infer(const InferenceRequest& request) {
  const auto generator = nn::load_generator(request.checkpoint);
  const auto depth = render::read_raster(request.depth);
  const auto direct = render::read_raster(request.direct);
  const int s = generator.config().resolution();
  if (depth.width != s || depth.height != s) {
    throw ShapeError("infer: checkpoint expects " + std::to_string(s) + "x" + std::to_string(s) + " buffers, got " +
                     std::to_string(depth.width) + "x" + std::to_string(depth.height));
  }
  Sample sample;
  sample.size = s;
  sample.input = network_input(depth, render::read_raster(request.normal), render::read_raster(request.diffuse), direct);
  const Image predicted = infer(generator, sample);
  if (!request.output.empty()) render::write_raster(request.output, predicted);
  if (!request.preview.empty()) {
    std::vector<Image> panels{direct, predicted};
    if (!request.ground_truth.empty()) panels.push_back(render::read_raster(request.ground_truth));
    render::write_ppm(request.preview, render::hstack(panels));
  }
  return predicted;
}

}  // namespace deepgi::train
