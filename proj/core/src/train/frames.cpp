// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/train/frames.hpp"

#include <algorithm>
#include <string>

#include "deepgi/common/error.hpp"
#include "deepgi/render/raster.hpp"

namespace deepgi::train {
namespace {

void check_buffer(const Image& img, int channels, int size, const char* what) {
  if (img.channels != channels || img.width != size || img.height != size) {
    throw ShapeError(std::string(what) + " buffer is " + std::to_string(img.width) + "x" +
                     std::to_string(img.height) + "x" + std::to_string(img.channels) + ", expected " +
                     std::to_string(size) + "x" + std::to_string(size) + "x" + std::to_string(channels));
  }
}

// HWC channel `c` of `img` into plane `plane` of a planar buffer.
template <typename Map>
void put_plane(const Image& img, int c, std::vector<float>& out, int plane, Map map) {
  const std::size_t hw = static_cast<std::size_t>(img.width) * img.height;
  float* dst = out.data() + static_cast<std::size_t>(plane) * hw;
  for (std::size_t i = 0; i < hw; ++i) dst[i] = map(img.data[i * img.channels + c]);
}

template <typename Map>
Image plane_image(const Tensor& t, std::int64_t n, Map map) {
  if (t.rank() != 4 || t.dim(1) != kOutputChannels || n < 0 || n >= t.dim(0)) {
    throw ShapeError("expected N x 3 x H x W network output, got " + shape_string(t.shape()));
  }
  const auto h = static_cast<std::int32_t>(t.dim(2)), w = static_cast<std::int32_t>(t.dim(3));
  Image img(w, h, kOutputChannels);
  const std::size_t hw = static_cast<std::size_t>(w) * h;
  const float* src = t.data().data() + static_cast<std::size_t>(n) * kOutputChannels * hw;
  for (int c = 0; c < kOutputChannels; ++c) {
    for (std::size_t i = 0; i < hw; ++i) img.data[i * kOutputChannels + c] = map(src[c * hw + i]);
  }
  return img;
}

}  // namespace

std::vector<float> network_input(const Image& depth, const Image& normal, const Image& diffuse, const Image& direct) {
  const int s = depth.width;
  check_buffer(depth, 1, s, "depth");
  check_buffer(normal, 3, s, "normal");
  check_buffer(diffuse, 3, s, "diffuse");
  check_buffer(direct, 3, s, "direct");
  std::vector<float> out(static_cast<std::size_t>(kInputChannels) * s * s);
  for (int p = 0; p < 3; ++p) put_plane(depth, 0, out, p, gbuffer_to_network);
  for (int c = 0; c < 3; ++c) {
    put_plane(normal, c, out, 3 + c, gbuffer_to_network);
    put_plane(diffuse, c, out, 6 + c, gbuffer_to_network);
    put_plane(direct, c, out, 9 + c, radiance_to_network);
  }
  return out;
}

std::vector<float> network_target(const Image& radiance) {
  check_buffer(radiance, 3, radiance.width, "ground-truth");
  std::vector<float> out(static_cast<std::size_t>(kOutputChannels) * radiance.width * radiance.height);
  for (int c = 0; c < 3; ++c) put_plane(radiance, c, out, c, radiance_to_network);
  return out;
}

Sample load_sample(const std::filesystem::path& dataset_dir, const render::FrameRecord& frame) {
  using render::Buffer;
  auto read = [&](Buffer b) { return render::read_raster(dataset_dir / frame.path(b)); };
  const auto depth = read(Buffer::depth);
  Sample s;
  s.index = frame.index;
  s.size = depth.width;
  s.input = network_input(depth, read(Buffer::normal), read(Buffer::diffuse), read(Buffer::direct));
  const auto gt = read(Buffer::gt);
  check_buffer(gt, 3, s.size, "ground-truth");
  s.target = network_target(gt);
  return s;
}

std::vector<Sample> load_split(const std::filesystem::path& dataset_dir, const render::DatasetManifest& manifest,
                               render::Split split) {
  std::vector<Sample> out;
  for (const auto& f : manifest.frames_in(split)) out.push_back(load_sample(dataset_dir, f));
  return out;
}

Batch make_batch(std::span<const Sample> samples, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("make_batch: empty batch");
  const int s = samples[indices[0]].size;
  const auto n = static_cast<std::int64_t>(indices.size());
  std::vector<float> in, tg;
  in.reserve(static_cast<std::size_t>(n) * kInputChannels * s * s);
  tg.reserve(static_cast<std::size_t>(n) * kOutputChannels * s * s);
  for (auto i : indices) {
    const auto& smp = samples[i];
    if (smp.size != s) throw ShapeError("make_batch: frames of different sizes");
    if (smp.target.empty()) throw ShapeError("make_batch: frame " + std::to_string(smp.index) + " has no target");
    in.insert(in.end(), smp.input.begin(), smp.input.end());
    tg.insert(tg.end(), smp.target.begin(), smp.target.end());
  }
  return {Tensor::from_data({n, kInputChannels, s, s}, std::move(in)),
          Tensor::from_data({n, kOutputChannels, s, s}, std::move(tg))};
}

Image to_display(const Tensor& network, std::int64_t n) { return plane_image(network, n, network_to_display); }

Image to_radiance(const Tensor& network, std::int64_t n) { return plane_image(network, n, network_to_radiance); }

Image radiance_to_display(const Image& radiance) {
  Image out = radiance;
  for (auto& v : out.data) v = network_to_display(radiance_to_network(v));
  return out;
}

}  // namespace deepgi::train
