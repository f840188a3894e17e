// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <span>
#include <vector>

#include "deepgi/common/image.hpp"
#include "deepgi/render/dataset.hpp"
#include "deepgi/tensor/tensor.hpp"

namespace deepgi::train {

/// Radiance is clamped to [0, kRadianceClamp] before mapping to the network
/// range [-1, 1] by r / 2 - 1. G-buffers already lie in [0, 1] and map by
/// 2x - 1.
inline constexpr float kRadianceClamp = 4.0f;
inline constexpr int kInputChannels = 12;
inline constexpr int kOutputChannels = 3;

inline float gbuffer_to_network(float v) { return 2.0f * v - 1.0f; }
inline float radiance_to_network(float r) { return std::min(std::max(r, 0.0f), kRadianceClamp) * 0.5f - 1.0f; }
inline float network_to_radiance(float y) { return 2.0f * (y + 1.0f); }
/// Display space used for metrics: (y + 1) / 2, i.e. radiance / 4 in [0, 1].
inline float network_to_display(float y) { return std::min(std::max(0.5f * (y + 1.0f), 0.0f), 1.0f); }

/// One frame in network layout: input 12 x S x S (depth three times, normal,
/// diffuse, direct) and target 3 x S x S, both planar.
struct Sample {
  int index = 0;
  int size = 0;
  std::vector<float> input;
  std::vector<float> target;  // empty when no ground truth is available
};

/// Builds the network input from raw buffers. `depth` has one channel, the
/// others three; all must share one square size.
std::vector<float> network_input(const Image& depth, const Image& normal, const Image& diffuse, const Image& direct);
/// HWC radiance image to planar network values.
std::vector<float> network_target(const Image& radiance);

Sample load_sample(const std::filesystem::path& dataset_dir, const render::FrameRecord& frame);
std::vector<Sample> load_split(const std::filesystem::path& dataset_dir, const render::DatasetManifest& manifest,
                               render::Split split);

/// Stacks samples (by index into `samples`) into N x 12 x S x S inputs and
/// N x 3 x S x S targets.
struct Batch {
  Tensor input;
  Tensor target;
};
Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices);

/// Image `n` of an N x 3 x S x S network tensor, as HWC display values.
Image to_display(const Tensor& network, std::int64_t n = 0);
/// Image `n` of an N x 3 x S x S network tensor, as HWC radiance.
Image to_radiance(const Tensor& network, std::int64_t n = 0);
/// HWC radiance to display space through the same clamp as the targets.
Image radiance_to_display(const Image& radiance);

}  // namespace deepgi::train
