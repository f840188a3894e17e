// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/nn/layers.hpp"

namespace deepgi::nn {
namespace {

Tensor normal_tensor(Shape shape, float mean, float stddev, SplitMix64& rng) {
  std::vector<float> data(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : data) v = mean + stddev * rng.normal();
  return Tensor::from_data(std::move(shape), std::move(data), true);
}

}  // namespace

ConvLayer ConvLayer::make(std::int64_t in_channels, std::int64_t out_channels, int stride, bool transposed,
                          bool with_bias, SplitMix64& rng) {
  ConvLayer layer;
  layer.stride = stride;
  layer.transposed = transposed;
  // Weight layout: Cout x Cin x k x k for conv, Cin x Cout x k x k for the transpose.
  const Shape shape = transposed ? Shape{in_channels, out_channels, kKernel, kKernel}
                                 : Shape{out_channels, in_channels, kKernel, kKernel};
  layer.weight = normal_tensor(shape, 0.0f, kInitStd, rng);
  if (with_bias) layer.bias = Tensor::zeros({out_channels}, true);
  return layer;
}

Tensor ConvLayer::forward(const Tensor& x) const {
  return transposed ? conv_transpose2d(x, weight, bias, stride, kPad) : conv2d(x, weight, bias, stride, kPad);
}

NormLayer NormLayer::make(std::int64_t channels, SplitMix64& rng) {
  NormLayer layer;
  layer.gamma = normal_tensor({channels}, 1.0f, kInitStd, rng);
  layer.beta = Tensor::zeros({channels}, true);
  layer.stats = BatchNormStats(static_cast<std::size_t>(channels));
  return layer;
}

Tensor Stage::forward(const Tensor& x, Mode mode, float dropout_p, std::uint64_t dropout_seed) {
  auto h = conv.forward(x);
  if (norm) h = batch_norm2d(h, norm->gamma, norm->beta, norm->stats, mode);
  if (dropout) h = deepgi::dropout(h, dropout_p, mode, dropout_seed);
  return activation(h, act);
}

Tensor Stage::predict(const Tensor& x) const {
  auto h = conv.forward(x);
  if (norm) h = batch_norm2d(h, norm->gamma, norm->beta, norm->stats);
  return activation(h, act);
}

void Stage::collect(const std::string& prefix, std::vector<NamedTensor>& params, std::vector<NamedBuffer>& buffers) {
  params.push_back({prefix + ".weight", conv.weight});
  if (conv.bias.defined()) params.push_back({prefix + ".bias", conv.bias});
  if (norm) {
    params.push_back({prefix + ".bn.gamma", norm->gamma});
    params.push_back({prefix + ".bn.beta", norm->beta});
    buffers.push_back({prefix + ".bn.running_mean", &norm->stats.running_mean});
    buffers.push_back({prefix + ".bn.running_var", &norm->stats.running_var});
  }
}

}  // namespace deepgi::nn
