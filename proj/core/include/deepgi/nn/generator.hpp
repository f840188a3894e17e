// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "deepgi/nn/layers.hpp"

namespace deepgi::nn {

struct GeneratorConfig {
  int base_layer_K = 64;
  int depth = 8;
  int in_channels = 12;
  int out_channels = 3;
  /// Widest encoder stage; 0 means 8 * base_layer_K.
  int channel_cap = 0;

  int effective_cap() const { return channel_cap > 0 ? channel_cap : 8 * base_layer_K; }
  /// Output channels of encoder stage i (0-based): min(K * 2^i, cap).
  int encoder_channels(int stage) const;
  /// Input spatial size the configuration accepts: 2^depth.
  int resolution() const { return 1 << depth; }
  void validate() const;

  bool operator==(const GeneratorConfig&) const = default;
};

struct GeneratorForwardOptions {
  Mode mode = Mode::eval;
  std::uint64_t seed = 0;  // dropout stream
  float dropout_p = 0.5f;
  /// Encoder output whose skip connection is replaced by zeros, or -1.
  /// Valid values are 0 .. depth - 2 (the innermost encoder has no skip).
  int disabled_skip = -1;
};

/// U-Net generator: `depth` stride-2 encoders (conv, batch norm except on the
/// first, LeakyReLU 0.2) down to 1x1, then `depth` transposed-conv decoders
/// (batch norm and ReLU except on the last, which uses tanh). Decoder i > 0
/// sees its predecessor's output concatenated with the mirrored encoder
/// output. The first three decoders apply dropout in train mode.
class Generator {
 public:
  static constexpr int kDropoutStages = 3;

  Generator(const GeneratorConfig& config, std::uint64_t init_seed);

  const GeneratorConfig& config() const { return config_; }

  /// N x 12 x S x S -> N x 3 x S x S with values in [-1, 1]. Train mode
  /// updates batch-norm running statistics.
  Tensor forward(const Tensor& input, const GeneratorForwardOptions& options);
  /// Eval-mode forward without side effects; safe for concurrent callers.
  Tensor predict(const Tensor& input) const;

  std::vector<Tensor> parameters();
  std::vector<NamedTensor> named_parameters();
  std::vector<NamedBuffer> named_buffers();
  std::int64_t parameter_count();

 private:
  void check_input(const Tensor& input) const;

  GeneratorConfig config_;
  std::vector<Stage> encoders_;
  std::vector<Stage> decoders_;
};

}  // namespace deepgi::nn
