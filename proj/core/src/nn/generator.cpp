// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/nn/generator.hpp"

#include <algorithm>
#include <string>

#include "deepgi/common/error.hpp"

namespace deepgi::nn {

int GeneratorConfig::encoder_channels(int stage) const {
  std::int64_t c = base_layer_K;
  for (int i = 0; i < stage && c < effective_cap(); ++i) c *= 2;
  return static_cast<int>(std::min<std::int64_t>(c, effective_cap()));
}

void GeneratorConfig::validate() const {
  if (base_layer_K < 1) throw ConfigError("generator: base_layer_K must be >= 1");
  if (depth < 1 || depth > 12) throw ConfigError("generator: depth must be in [1, 12]");
  if (in_channels < 1 || out_channels < 1) throw ConfigError("generator: channel counts must be >= 1");
  if (channel_cap < 0) throw ConfigError("generator: channel_cap must be >= 0");
}

Generator::Generator(const GeneratorConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  SplitMix64 rng(hash_keys(init_seed, 0x6e6e /* "gen" stream */));
  const int d = config_.depth;

  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? config_.in_channels : config_.encoder_channels(i - 1);
    const int out = config_.encoder_channels(i);
    const bool normed = i > 0;
    Stage s;
    s.conv = ConvLayer::make(in, out, 2, false, !normed, rng);
    if (normed) s.norm = NormLayer::make(out, rng);
    s.act = Activation::leaky_relu;
    encoders_.push_back(std::move(s));
  }
  for (int i = 0; i < d; ++i) {
    const bool last = i == d - 1;
    // Decoder i mirrors encoder d-1-i; its input adds the skip from encoder d-1-i.
    const int prev = i == 0 ? 0 : config_.encoder_channels(d - 1 - i);
    const int in = config_.encoder_channels(d - 1 - i) + prev;
    const int out = last ? config_.out_channels : config_.encoder_channels(d - 2 - i);
    Stage s;
    s.conv = ConvLayer::make(in, out, 2, true, last, rng);
    if (!last) s.norm = NormLayer::make(out, rng);
    s.act = last ? Activation::tanh : Activation::relu;
    s.dropout = !last && i < kDropoutStages;
    decoders_.push_back(std::move(s));
  }
}

void Generator::check_input(const Tensor& input) const {
  if (input.rank() != 4) {
    throw ShapeError("generator: input must be N x C x H x W, got " + shape_string(input.shape()));
  }
  if (input.dim(1) != config_.in_channels) {
    throw ShapeError("generator: expected " + std::to_string(config_.in_channels) + " input channels, got " +
                     std::to_string(input.dim(1)));
  }
  const int s = config_.resolution();
  if (input.dim(2) != s || input.dim(3) != s) {
    throw ShapeError("generator: depth " + std::to_string(config_.depth) + " needs " + std::to_string(s) + "x" +
                     std::to_string(s) + " input, got " + std::to_string(input.dim(2)) + "x" +
                     std::to_string(input.dim(3)));
  }
}

Tensor Generator::forward(const Tensor& input, const GeneratorForwardOptions& options) {
  check_input(input);
  const int d = config_.depth;
  if (options.disabled_skip < -1 || options.disabled_skip > d - 2) {
    throw ConfigError("generator: disabled_skip must be in [-1, " + std::to_string(d - 2) + "]");
  }
  std::vector<Tensor> skips;
  Tensor h = input;
  for (int i = 0; i < d; ++i) {
    h = encoders_[static_cast<std::size_t>(i)].forward(h, options.mode, 0.0f, 0);
    skips.push_back(h);
  }
  for (int i = 0; i < d; ++i) {
    if (i > 0) {
      const int skip = d - 1 - i;
      const Tensor& e = skips[static_cast<std::size_t>(skip)];
      h = concat_channels(h, skip == options.disabled_skip ? Tensor::zeros(e.shape()) : e);
    }
    h = decoders_[static_cast<std::size_t>(i)].forward(h, options.mode, options.dropout_p,
                                                       hash_keys(options.seed, static_cast<std::uint64_t>(i)));
  }
  return h;
}

Tensor Generator::predict(const Tensor& input) const {
  check_input(input);
  NoGradGuard guard;
  const int d = config_.depth;
  std::vector<Tensor> skips;
  Tensor h = input;
  for (const auto& e : encoders_) {
    h = e.predict(h);
    skips.push_back(h);
  }
  for (int i = 0; i < d; ++i) {
    if (i > 0) h = concat_channels(h, skips[static_cast<std::size_t>(d - 1 - i)]);
    h = decoders_[static_cast<std::size_t>(i)].predict(h);
  }
  return h;
}

std::vector<NamedTensor> Generator::named_parameters() {
  std::vector<NamedTensor> params;
  std::vector<NamedBuffer> buffers;
  for (std::size_t i = 0; i < encoders_.size(); ++i) encoders_[i].collect("enc" + std::to_string(i), params, buffers);
  for (std::size_t i = 0; i < decoders_.size(); ++i) decoders_[i].collect("dec" + std::to_string(i), params, buffers);
  return params;
}

std::vector<NamedBuffer> Generator::named_buffers() {
  std::vector<NamedTensor> params;
  std::vector<NamedBuffer> buffers;
  for (std::size_t i = 0; i < encoders_.size(); ++i) encoders_[i].collect("enc" + std::to_string(i), params, buffers);
  for (std::size_t i = 0; i < decoders_.size(); ++i) decoders_[i].collect("dec" + std::to_string(i), params, buffers);
  return buffers;
}

std::vector<Tensor> Generator::parameters() {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

std::int64_t Generator::parameter_count() {
  std::int64_t n = 0;
  for (auto& p : named_parameters()) n += p.tensor.numel();
  return n;
}

}  // namespace deepgi::nn
