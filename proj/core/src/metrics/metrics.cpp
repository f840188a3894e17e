// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "deepgi/common/error.hpp"

namespace deepgi::metrics {
namespace {

void require_same(const char* what, const Image& a, const Image& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": image shapes differ (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + "x" + std::to_string(a.channels) + " vs " +
                     std::to_string(b.width) + "x" + std::to_string(b.height) + "x" + std::to_string(b.channels) +
                     ")");
  }
  if (a.data.empty()) throw ShapeError(std::string(what) + ": empty image");
}

std::array<double, kSsimWindow> gaussian_window() {
  std::array<double, kSsimWindow> w{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += w[static_cast<std::size_t>(i)];
  }
  for (auto& v : w) v /= total;
  return w;
}

/// Separable 'valid' Gaussian filter of one channel of f(a, b).
template <typename F>
std::vector<double> filter_valid(const Image& a, const Image& b, int channel, F f,
                                 const std::array<double, kSsimWindow>& w) {
  const int ow = a.width - kSsimWindow + 1;
  const int oh = a.height - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(a.height) * ow);
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        acc += w[static_cast<std::size_t>(k)] * f(a.at(x + k, y, channel), b.at(x + k, y, channel));
      }
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k) {
        acc += w[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      }
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same("mse", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double ssim(const Image& a, const Image& b) {
  require_same("ssim", a, b);
  if (a.width < kSsimWindow || a.height < kSsimWindow) {
    throw ShapeError("ssim: image " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                     " is smaller than the " + std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) +
                     " window");
  }
  constexpr double c1 = kSsimK1 * kSsimK1;
  constexpr double c2 = kSsimK2 * kSsimK2;
  const auto w = gaussian_window();
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    const auto mu1 = filter_valid(a, b, c, [](double x, double) { return x; }, w);
    const auto mu2 = filter_valid(a, b, c, [](double, double y) { return y; }, w);
    const auto e11 = filter_valid(a, b, c, [](double x, double) { return x * x; }, w);
    const auto e22 = filter_valid(a, b, c, [](double, double y) { return y * y; }, w);
    const auto e12 = filter_valid(a, b, c, [](double x, double y) { return x * y; }, w);
    double channel_sum = 0.0;
    for (std::size_t i = 0; i < mu1.size(); ++i) {
      const double m1 = mu1[i], m2 = mu2[i];
      const double s11 = e11[i] - m1 * m1;
      const double s22 = e22[i] - m2 * m2;
      const double s12 = e12[i] - m1 * m2;
      channel_sum += ((2.0 * m1 * m2 + c1) * (2.0 * s12 + c2)) / ((m1 * m1 + m2 * m2 + c1) * (s11 + s22 + c2));
    }
    total += channel_sum / static_cast<double>(mu1.size());
  }
  return total / a.channels;
}

double psnr_from_mse(double m) {
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double psnr(const Image& a, const Image& b) { return psnr_from_mse(mse(a, b)); }

MetricReport compare(const Image& a, const Image& b) {
  MetricReport r;
  r.mse = mse(a, b);
  r.ssim = ssim(a, b);
  r.psnr = psnr_from_mse(r.mse);
  return r;
}

}  // namespace deepgi::metrics
