// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "deepgi/nn/layers.hpp"

namespace deepgi::nn {

struct DiscriminatorConfig {
  int base_layer_k = 64;
  int num_encoders = 5;
  int in_channels = 15;

  /// Output channels of layer i: k * 2^i (at most 8k) for all but the last
  /// layer, which produces one channel.
  int layer_channels(int layer) const;
  /// Stride 2 for all layers except the last two, which use stride 1.
  int layer_stride(int layer) const;
  /// Side length of the patch map for a square input of side `input_size`.
  std::int64_t patch_map_size(std::int64_t input_size) const;
  void validate() const;

  bool operator==(const DiscriminatorConfig&) const = default;
};

/// PatchGAN discriminator: a stack of 4x4 convolutions over the
/// concatenation of the conditioning buffers and an image, producing a map
/// of per-patch probabilities. Batch norm on every layer except the first
/// and last; LeakyReLU 0.2 except for the final sigmoid.
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& config, std::uint64_t init_seed);

  const DiscriminatorConfig& config() const { return config_; }

  /// condition N x Cc x S x S, image N x Ci x S x S with Cc + Ci equal to
  /// in_channels. Returns N x 1 x P x P probabilities in (0, 1).
  Tensor forward(const Tensor& condition, const Tensor& image, Mode mode);
  Tensor predict(const Tensor& condition, const Tensor& image) const;

  /// Mean over the patch map: the discriminator's scalar verdict.
  static Tensor score(const Tensor& patch_map) { return mean(patch_map); }

  std::vector<Tensor> parameters();
  std::vector<NamedTensor> named_parameters();
  std::vector<NamedBuffer> named_buffers();
  std::int64_t parameter_count();

 private:
  Tensor join(const Tensor& condition, const Tensor& image) const;

  DiscriminatorConfig config_;
  std::vector<Stage> layers_;
};

}  // namespace deepgi::nn
