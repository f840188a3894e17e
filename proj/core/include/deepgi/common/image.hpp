// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace deepgi {

/// Row-major float image with interleaved channels: pixel (x, y) channel c
/// lives at ((y * width) + x) * channels + c.
struct Image {
  std::int32_t width = 0;
  std::int32_t height = 0;
  std::int32_t channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(std::int32_t w, std::int32_t h, std::int32_t c, float fill = 0.0f)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(std::int32_t x, std::int32_t y, std::int32_t c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(std::int32_t x, std::int32_t y, std::int32_t c = 0) { return data[index(x, y, c)]; }
  float at(std::int32_t x, std::int32_t y, std::int32_t c = 0) const { return data[index(x, y, c)]; }

  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

}  // namespace deepgi
