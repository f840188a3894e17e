// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "deepgi/common/image.hpp"

namespace deepgi::metrics {

/// Display-space comparison of two images with values in [0, 1].
struct MetricReport {
  double mse = 0.0;
  double ssim = 1.0;
  double psnr = 0.0;
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr double kPsnrCap = 99.0;

/// Mean over all pixels and channels of the squared difference.
double mse(const Image& a, const Image& b);

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5) and
/// C1 = (0.01)^2, C2 = (0.03)^2 at unit dynamic range. The SSIM map is
/// evaluated at every window position fully inside the image, averaged per
/// channel, then averaged over channels.
double ssim(const Image& a, const Image& b);

/// 10 log10(1 / mse), capped at 99 dB (identical images report the cap).
double psnr(const Image& a, const Image& b);
double psnr_from_mse(double mse);

MetricReport compare(const Image& a, const Image& b);

}  // namespace deepgi::metrics
