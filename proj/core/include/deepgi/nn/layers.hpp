// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deepgi/common/random.hpp"
#include "deepgi/tensor/ops.hpp"

namespace deepgi::nn {

inline constexpr int kKernel = 4;
inline constexpr int kPad = 1;
inline constexpr float kInitStd = 0.02f;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Non-trainable per-layer state (batch-norm running statistics) by name.
struct NamedBuffer {
  std::string name;
  std::vector<float>* values;
};

/// Convolution (or transposed convolution) with a 4x4 kernel and pad 1.
struct ConvLayer {
  Tensor weight;
  Tensor bias;  // undefined when followed by batch norm
  int stride = 2;
  bool transposed = false;

  static ConvLayer make(std::int64_t in_channels, std::int64_t out_channels, int stride, bool transposed,
                        bool with_bias, SplitMix64& rng);
  Tensor forward(const Tensor& x) const;
};

struct NormLayer {
  Tensor gamma;
  Tensor beta;
  BatchNormStats stats;

  static NormLayer make(std::int64_t channels, SplitMix64& rng);
};

/// conv -> [batch norm] -> [dropout] -> activation.
struct Stage {
  ConvLayer conv;
  std::optional<NormLayer> norm;
  Activation act = Activation::leaky_relu;
  bool dropout = false;

  /// Train mode folds batch statistics into the running stats.
  Tensor forward(const Tensor& x, Mode mode, float dropout_p, std::uint64_t dropout_seed);
  /// Eval mode; never mutates.
  Tensor predict(const Tensor& x) const;

  void collect(const std::string& prefix, std::vector<NamedTensor>& params, std::vector<NamedBuffer>& buffers);
};

}  // namespace deepgi::nn
