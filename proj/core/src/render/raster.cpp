// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/render/raster.hpp"

#include <algorithm>
#include <cmath>

#include "deepgi/common/binary_io.hpp"
#include "deepgi/common/error.hpp"

namespace deepgi::render {
namespace {

constexpr std::string_view kMagic = "DIB1";
constexpr std::uint32_t kMaxSide = 1u << 16;
constexpr std::uint32_t kMaxChannels = 64;

}  // namespace

std::vector<std::uint8_t> encode_raster(const Image& image) {
  if (image.width < 0 || image.height < 0 || image.channels < 0 ||
      image.data.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw ShapeError("raster: image data does not match its dimensions");
  }
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(static_cast<std::uint32_t>(image.width));
  w.u32(static_cast<std::uint32_t>(image.height));
  w.u32(static_cast<std::uint32_t>(image.channels));
  w.f32_array(image.data);
  return w.buffer();
}

Image decode_raster(std::span<const std::uint8_t> bytes, const std::string& context) {
  ByteReader r(bytes, context);
  if (r.bytes(4) != kMagic) throw FormatError(context + ": bad magic (not a DIB1 raster)");
  const auto w = r.u32(), h = r.u32(), c = r.u32();
  if (w > kMaxSide || h > kMaxSide || c > kMaxChannels) {
    throw FormatError(context + ": implausible dimensions " + std::to_string(w) + "x" + std::to_string(h) + "x" +
                      std::to_string(c));
  }
  Image img(static_cast<std::int32_t>(w), static_cast<std::int32_t>(h), static_cast<std::int32_t>(c));
  if (img.data.size() * 4 > r.remaining()) throw FormatError(context + ": truncated");
  r.f32_array(img.data);
  if (r.remaining() != 0) throw FormatError(context + ": trailing bytes");
  return img;
}

void write_raster(const std::filesystem::path& path, const Image& image) {
  write_file_atomic(path, encode_raster(image));
}

Image read_raster(const std::filesystem::path& path) { return decode_raster(read_file_bytes(path), path.string()); }

void write_ppm(const std::filesystem::path& path, const Image& image, bool gamma) {
  if (image.channels != 1 && image.channels != 3) {
    throw ShapeError("ppm: need 1 or 3 channels, got " + std::to_string(image.channels));
  }
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(image.width) * image.height * 3);
  for (std::int32_t y = 0; y < image.height; ++y) {
    for (std::int32_t x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp<double>(image.at(x, y, image.channels == 1 ? 0 : c), 0.0, 1.0);
        if (gamma) v = std::pow(v, 1.0 / 2.2);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  write_file_atomic(path, out);
}

Image hstack(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("hstack: no images");
  std::int32_t width = 0;
  for (const auto& im : images) {
    if (im.height != images[0].height || im.channels != images[0].channels) {
      throw ShapeError("hstack: images differ in height or channel count");
    }
    width += im.width;
  }
  Image out(width, images[0].height, images[0].channels);
  std::int32_t x0 = 0;
  for (const auto& im : images) {
    for (std::int32_t y = 0; y < im.height; ++y) {
      std::copy_n(im.data.begin() + static_cast<std::ptrdiff_t>(im.index(0, y)),
                  static_cast<std::ptrdiff_t>(im.width) * im.channels,
                  out.data.begin() + static_cast<std::ptrdiff_t>(out.index(x0, y)));
    }
    x0 += im.width;
  }
  return out;
}

}  // namespace deepgi::render
