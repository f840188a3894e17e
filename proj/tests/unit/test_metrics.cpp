// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "deepgi/common/error.hpp"
#include "deepgi/common/random.hpp"
#include "deepgi/metrics/metrics.hpp"

using namespace deepgi;
using namespace deepgi::metrics;

namespace {

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Image img(w, h, c);
  SplitMix64 rng(seed);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

/// Smooth structured image (gradients plus a disc) for noise sweeps.
Image test_pattern(int size) {
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = x - size / 2.0, dy = y - size / 2.0;
      const bool disc = dx * dx + dy * dy < size * size / 9.0;
      img.at(x, y, 0) = static_cast<float>(x) / size;
      img.at(x, y, 1) = static_cast<float>(y) / size;
      img.at(x, y, 2) = disc ? 0.8f : 0.2f;
    }
  }
  return img;
}

Image add_noise(const Image& img, float sigma, std::uint64_t seed) {
  Image out = img;
  SplitMix64 rng(seed);
  for (auto& v : out.data) v = std::clamp(v + sigma * rng.normal(), 0.0f, 1.0f);
  return out;
}

/// Direct (non-separable) evaluation of the windowed SSIM definition.
double brute_force_ssim(const Image& a, const Image& b) {
  const int r = kSsimWindow / 2;
  double weights[kSsimWindow][kSsimWindow];
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    for (int j = 0; j < kSsimWindow; ++j) {
      const double di = i - r, dj = j - r;
      weights[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * kSsimSigma * kSsimSigma));
      total += weights[i][j];
    }
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    double channel = 0.0;
    int count = 0;
    for (int y = 0; y + kSsimWindow <= a.height; ++y) {
      for (int x = 0; x + kSsimWindow <= a.width; ++x) {
        double m1 = 0, m2 = 0;
        for (int i = 0; i < kSsimWindow; ++i) {
          for (int j = 0; j < kSsimWindow; ++j) {
            const double wgt = weights[i][j] / total;
            m1 += wgt * a.at(x + j, y + i, c);
            m2 += wgt * b.at(x + j, y + i, c);
          }
        }
        double v1 = 0, v2 = 0, cov = 0;
        for (int i = 0; i < kSsimWindow; ++i) {
          for (int j = 0; j < kSsimWindow; ++j) {
            const double wgt = weights[i][j] / total;
            const double p = a.at(x + j, y + i, c) - m1, q = b.at(x + j, y + i, c) - m2;
            v1 += wgt * p * p;
            v2 += wgt * q * q;
            cov += wgt * p * q;
          }
        }
        channel += (2 * m1 * m2 + c1) * (2 * cov + c2) / ((m1 * m1 + m2 * m2 + c1) * (v1 + v2 + c2));
        ++count;
      }
    }
    acc += channel / count;
  }
  return acc / a.channels;
}

}  // namespace

TEST_CASE("mse examples") {
  auto a = random_image(8, 8, 3, 1);
  auto b = random_image(8, 8, 3, 2);
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(Image(4, 4, 3, 0.0f), Image(4, 4, 3, 1.0f)) == 1.0);
  CHECK(mse(a, b) == mse(b, a));
  CHECK(mse(a, b) > 0.0);
}

TEST_CASE("mse rejects shape mismatch") {
  CHECK_THROWS_AS(mse(Image(4, 4, 3), Image(4, 4, 1)), ShapeError);
}

TEST_CASE("ssim of an image with itself is 1") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto a = random_image(24, 20, 3, seed);
    CHECK(std::abs(ssim(a, a) - 1.0) < 1e-6);
  }
}

TEST_CASE("constant images follow the luminance-only formula") {
  const double expected = (2 * 0.5 * 0.25 + 1e-4) / (0.25 + 0.0625 + 1e-4);
  CHECK(std::abs(expected - 0.8003) < 1e-3);  // quoted to four places as 0.8003; exact value 0.800064
  CHECK(std::abs(ssim(Image(32, 32, 3, 0.5f), Image(32, 32, 3, 0.25f)) - expected) < 1e-6);
}

TEST_CASE("separable implementation matches direct windowed evaluation") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto a = random_image(17, 14, 2, seed);
    auto b = add_noise(a, 0.2f, seed + 10);
    CHECK(std::abs(ssim(a, b) - brute_force_ssim(a, b)) < 1e-9);
  }
}

TEST_CASE("ssim is symmetric and bounded by 1") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto a = random_image(16, 16, 3, seed);
    auto b = random_image(16, 16, 3, seed + 100);
    const double ab = ssim(a, b);
    CHECK(std::abs(ab - ssim(b, a)) < 1e-12);
    CHECK(ab <= 1.0);
    CHECK(ab >= -1.0);
  }
}

TEST_CASE("ssim rejects images smaller than the window") {
  CHECK_THROWS_AS(ssim(Image(10, 32, 1), Image(10, 32, 1)), ShapeError);
}

TEST_CASE("ssim decreases as Gaussian noise grows") {
  const auto clean = test_pattern(64);
  double previous = 1.0;
  for (float sigma : {0.01f, 0.05f, 0.1f}) {
    const double s = ssim(clean, add_noise(clean, sigma, 7));
    CHECK(s < previous);
    previous = s;
  }
}

TEST_CASE("psnr examples") {
  CHECK(psnr_from_mse(0.01) == doctest::Approx(20.0));
  auto a = random_image(8, 8, 3, 3);
  CHECK(psnr(a, a) == kPsnrCap);
  auto b = add_noise(a, 0.05f, 1);
  auto c = add_noise(a, 0.2f, 1);
  CHECK(mse(a, b) < mse(a, c));
  CHECK(psnr(a, b) > psnr(a, c));
}

TEST_CASE("compare bundles all three") {
  auto a = test_pattern(32);
  auto r = compare(a, a);
  CHECK(r.mse == 0.0);
  CHECK(std::abs(r.ssim - 1.0) < 1e-6);
  CHECK(r.psnr == kPsnrCap);
}
