// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/nn/discriminator.hpp"

#include <algorithm>
#include <string>

#include "deepgi/common/error.hpp"

namespace deepgi::nn {

int DiscriminatorConfig::layer_channels(int layer) const {
  if (layer == num_encoders - 1) return 1;
  return base_layer_k << std::min(layer, 3);
}

int DiscriminatorConfig::layer_stride(int layer) const { return layer < num_encoders - 2 ? 2 : 1; }

std::int64_t DiscriminatorConfig::patch_map_size(std::int64_t input_size) const {
  std::int64_t s = input_size;
  for (int i = 0; i < num_encoders; ++i) s = conv_output_size(s, kKernel, layer_stride(i), kPad);
  return s;
}

void DiscriminatorConfig::validate() const {
  if (base_layer_k < 1) throw ConfigError("discriminator: base_layer_k must be >= 1");
  if (num_encoders < 2) throw ConfigError("discriminator: num_encoders must be >= 2");
  if (in_channels < 1) throw ConfigError("discriminator: in_channels must be >= 1");
}

Discriminator::Discriminator(const DiscriminatorConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  SplitMix64 rng(hash_keys(init_seed, 0xd15c /* "disc" stream */));
  for (int i = 0; i < config_.num_encoders; ++i) {
    const bool first = i == 0;
    const bool last = i == config_.num_encoders - 1;
    const bool normed = !first && !last;
    const int in = first ? config_.in_channels : config_.layer_channels(i - 1);
    Stage s;
    s.conv = ConvLayer::make(in, config_.layer_channels(i), config_.layer_stride(i), false, !normed, rng);
    if (normed) s.norm = NormLayer::make(config_.layer_channels(i), rng);
    s.act = last ? Activation::sigmoid : Activation::leaky_relu;
    layers_.push_back(std::move(s));
  }
}

Tensor Discriminator::join(const Tensor& condition, const Tensor& image) const {
  if (condition.rank() != 4 || image.rank() != 4) {
    throw ShapeError("discriminator: inputs must be N x C x H x W, got " + shape_string(condition.shape()) +
                     " and " + shape_string(image.shape()));
  }
  if (condition.dim(0) != image.dim(0)) {
    throw ShapeError("discriminator: batch sizes differ (" + std::to_string(condition.dim(0)) + " vs " +
                     std::to_string(image.dim(0)) + ")");
  }
  if (condition.dim(1) + image.dim(1) != config_.in_channels) {
    throw ShapeError("discriminator: expected " + std::to_string(config_.in_channels) + " channels in total, got " +
                     std::to_string(condition.dim(1)) + " + " + std::to_string(image.dim(1)));
  }
  const auto p = config_.patch_map_size(condition.dim(2));
  if (p < 1) {
    throw ShapeError("discriminator: input " + std::to_string(condition.dim(2)) + "x" +
                     std::to_string(condition.dim(3)) + " is too small for " +
                     std::to_string(config_.num_encoders) + " layers");
  }
  return concat_channels(condition, image);
}

Tensor Discriminator::forward(const Tensor& condition, const Tensor& image, Mode mode) {
  Tensor h = join(condition, image);
  for (auto& layer : layers_) h = layer.forward(h, mode, 0.0f, 0);
  return h;
}

Tensor Discriminator::predict(const Tensor& condition, const Tensor& image) const {
  NoGradGuard guard;
  Tensor h = join(condition, image);
  for (const auto& layer : layers_) h = layer.predict(h);
  return h;
}

std::vector<NamedTensor> Discriminator::named_parameters() {
  std::vector<NamedTensor> params;
  std::vector<NamedBuffer> buffers;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect("layer" + std::to_string(i), params, buffers);
  return params;
}

std::vector<NamedBuffer> Discriminator::named_buffers() {
  std::vector<NamedTensor> params;
  std::vector<NamedBuffer> buffers;
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].collect("layer" + std::to_string(i), params, buffers);
  return buffers;
}

std::vector<Tensor> Discriminator::parameters() {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

std::int64_t Discriminator::parameter_count() {
  std::int64_t n = 0;
  for (auto& p : named_parameters()) n += p.tensor.numel();
  return n;
}

}  // namespace deepgi::nn
