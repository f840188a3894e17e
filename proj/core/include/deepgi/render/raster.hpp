// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "deepgi/common/image.hpp"

namespace deepgi::render {

/// Buffer files: magic "DIB1", u32 width, u32 height, u32 channels, then
/// float32 samples in row-major order with interleaved channels; all
/// little-endian.
std::vector<std::uint8_t> encode_raster(const Image& image);
Image decode_raster(std::span<const std::uint8_t> bytes, const std::string& context = "raster");

void write_raster(const std::filesystem::path& path, const Image& image);
Image read_raster(const std::filesystem::path& path);

/// 8-bit binary PPM of a 1- or 3-channel image; values are clamped to
/// [0, 1] and gamma-encoded with exponent 1/2.2 when `gamma` is set.
void write_ppm(const std::filesystem::path& path, const Image& image, bool gamma = true);

/// Places images side by side (same height and channel count).
Image hstack(std::span<const Image> images);

}  // namespace deepgi::render
