// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace deepgi {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Combines several keys into one well-mixed 64-bit value. Used to derive
/// independent random streams from (seed, frame, pixel, sample) tuples.
constexpr std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}
constexpr std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  return hash_keys(hash_keys(a, b), c);
}
constexpr std::uint64_t hash_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                  std::uint64_t d) noexcept {
  return hash_keys(hash_keys(a, b, c), d);
}

/// Uniform float in [0, 1) from the top 24 bits of a 64-bit value.
constexpr float to_unit_float(std::uint64_t bits) noexcept {
  return static_cast<float>(bits >> 40) * (1.0f / 16777216.0f);
}

/// Small counter-based generator. Its whole state is one word, so streams
/// can be created per pixel or per tensor element without coordination.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr float uniform() noexcept { return to_unit_float((*this)()); }

  /// Standard normal via Box-Muller (one value per call).
  float normal() noexcept;

 private:
  std::uint64_t state_;
};

}  // namespace deepgi
