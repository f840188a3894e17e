// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "deepgi/tensor/tensor.hpp"

namespace deepgi {

enum class Mode { train, eval };

enum class Activation { leaky_relu, relu, tanh, sigmoid };

inline constexpr float kDefaultLeakySlope = 0.2f;
inline constexpr float kBceClamp = 1e-7f;

/// 2-D convolution. input N x Cin x H x W, weight Cout x Cin x k x k, bias
/// Cout (may be undefined). Output spatial size floor((H + 2 pad - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);

/// Transposed convolution, the adjoint of conv2d's linear map. weight is
/// Cin x Cout x k x k. Output spatial size (H - 1) stride - 2 pad + k.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad);

/// Running statistics owned by a batch-norm layer.
struct BatchNormStats {
  std::vector<float> running_mean;
  std::vector<float> running_var;

  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean(channels, 0.0f), running_var(channels, 1.0f) {}
};

struct BatchNormOptions {
  float eps = 1e-5f;
  float momentum = 0.1f;
};

/// Per-channel normalization. Train mode normalizes with the batch
/// statistics over N, H, W (biased variance) and folds them into `stats`
/// with the given momentum (unbiased variance, as is customary). Eval mode
/// reads `stats` only.
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                    Mode mode, BatchNormOptions options = {});
/// Eval-mode only; never touches `stats`.
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, const BatchNormStats& stats,
                    BatchNormOptions options = {});

Tensor activation(const Tensor& input, Activation kind, float slope = kDefaultLeakySlope);
Tensor leaky_relu(const Tensor& input, float slope = kDefaultLeakySlope);
Tensor relu(const Tensor& input);
Tensor tanh(const Tensor& input);
Tensor sigmoid(const Tensor& input);

/// Inverted dropout: in train mode each element is zeroed with probability
/// p and survivors are scaled by 1 / (1 - p). The mask is a pure function of
/// (seed, element index). Eval mode is the identity.
Tensor dropout(const Tensor& input, float p, Mode mode, std::uint64_t seed);

/// Concatenates two N x C x H x W tensors along the channel axis.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Mean absolute difference, differentiable w.r.t. pred.
Tensor l1_loss(const Tensor& pred, const Tensor& target);

/// Mean binary cross-entropy. pred is clamped to [1e-7, 1 - 1e-7] before the
/// logarithm; the gradient is evaluated at the clamped value and passed
/// straight through. Differentiable w.r.t. pred.
Tensor bce_loss(const Tensor& pred, const Tensor& target);

Tensor sum(const Tensor& input);
Tensor mean(const Tensor& input);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& input, float factor);

/// Output spatial extent of conv2d along one axis.
std::int64_t conv_output_size(std::int64_t in, int kernel, int stride, int pad);
/// Output spatial extent of conv_transpose2d along one axis.
std::int64_t conv_transpose_output_size(std::int64_t in, int kernel, int stride, int pad);

}  // namespace deepgi
