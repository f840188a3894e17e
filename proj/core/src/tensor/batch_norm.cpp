// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "deepgi/common/error.hpp"
#include "deepgi/tensor/ops.hpp"

namespace deepgi {
namespace {

void check_args(const Tensor& input, const Tensor& gamma, const Tensor& beta, const BatchNormStats& stats,
                const BatchNormOptions& options) {
  if (!(options.eps > 0.0f)) throw ConfigError("batch_norm2d: eps must be > 0, got " + std::to_string(options.eps));
  if (input.rank() != 4) {
    throw ShapeError("batch_norm2d: input must be N x C x H x W, got " + shape_string(input.shape()));
  }
  const auto c = input.dim(1);
  if (gamma.rank() != 1 || gamma.dim(0) != c) {
    throw ShapeError("batch_norm2d: gamma must have shape [" + std::to_string(c) + "], got " +
                     shape_string(gamma.shape()));
  }
  if (beta.rank() != 1 || beta.dim(0) != c) {
    throw ShapeError("batch_norm2d: beta must have shape [" + std::to_string(c) + "], got " +
                     shape_string(beta.shape()));
  }
  if (static_cast<std::int64_t>(stats.running_mean.size()) != c ||
      static_cast<std::int64_t>(stats.running_var.size()) != c) {
    throw ShapeError("batch_norm2d: running statistics hold " + std::to_string(stats.running_mean.size()) +
                     " channels, input has " + std::to_string(c));
  }
}

/// Shared by both modes: y = gamma * xhat + beta given per-channel shift and
/// inverse standard deviation. Returns xhat for the backward pass.
std::vector<float> normalize(std::span<const float> x, std::span<const float> gamma, std::span<const float> beta,
                             const std::vector<double>& shift, const std::vector<double>& inv_std,
                             std::int64_t n, std::int64_t c, std::int64_t p, std::vector<float>& y) {
  std::vector<float> xhat(x.size());
  y.resize(x.size());
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const auto cu = static_cast<std::size_t>(ch);
      const std::int64_t base = (i * c + ch) * p;
      for (std::int64_t j = 0; j < p; ++j) {
        const auto idx = static_cast<std::size_t>(base + j);
        const float xh = static_cast<float>((x[idx] - shift[cu]) * inv_std[cu]);
        xhat[idx] = xh;
        y[idx] = gamma[cu] * xh + beta[cu];
      }
    }
  }
  return xhat;
}

Tensor attach_backward(std::vector<float> out, const Tensor& input, const Tensor& gamma, const Tensor& beta,
                       std::vector<float> xhat, std::vector<double> inv_std, bool batch_stats) {
  const std::int64_t n = input.dim(0), c = input.dim(1), p = input.dim(2) * input.dim(3);
  return detail::make_result(
      "batch_norm2d", input.shape(), std::move(out), {input, gamma, beta},
      [n, c, p, batch_stats, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          const detail::TensorImpl& self, std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        const auto& x = in[0];
        const auto& g = in[1];
        const auto& b = in[2];
        const double m = static_cast<double>(n * p);
        for (std::int64_t ch = 0; ch < c; ++ch) {
          const auto cu = static_cast<std::size_t>(ch);
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t base = (i * c + ch) * p;
            for (std::int64_t j = 0; j < p; ++j) {
              const auto idx = static_cast<std::size_t>(base + j);
              sum_dy += self.grad[idx];
              sum_dy_xhat += static_cast<double>(self.grad[idx]) * xhat[idx];
            }
          }
          if (g && g->requires_grad) g->grad_buffer()[cu] += static_cast<float>(sum_dy_xhat);
          if (b && b->requires_grad) b->grad_buffer()[cu] += static_cast<float>(sum_dy);
          if (!(x && x->requires_grad)) continue;
          auto& dx = x->grad_buffer();
          const double gamma = g->data[cu];
          for (std::int64_t i = 0; i < n; ++i) {
            const std::int64_t base = (i * c + ch) * p;
            for (std::int64_t j = 0; j < p; ++j) {
              const auto idx = static_cast<std::size_t>(base + j);
              double d;
              if (batch_stats) {
                d = gamma * inv_std[cu] * (self.grad[idx] - sum_dy / m - xhat[idx] * sum_dy_xhat / m);
              } else {
                d = gamma * inv_std[cu] * self.grad[idx];
              }
              dx[idx] += static_cast<float>(d);
            }
          }
        }
      });
}

}  // namespace

Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, Mode mode,
                    BatchNormOptions options) {
  if (mode == Mode::eval) return batch_norm2d(input, gamma, beta, static_cast<const BatchNormStats&>(stats), options);
  check_args(input, gamma, beta, stats, options);
  const std::int64_t n = input.dim(0), c = input.dim(1), p = input.dim(2) * input.dim(3);
  const auto x = input.data();
  const double m = static_cast<double>(n * p);

  std::vector<double> mean(static_cast<std::size_t>(c)), inv_std(static_cast<std::size_t>(c));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const auto cu = static_cast<std::size_t>(ch);
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const float* src = x.data() + (i * c + ch) * p;
      for (std::int64_t j = 0; j < p; ++j) s += src[j];
    }
    const double mu = s / m;
    double ss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const float* src = x.data() + (i * c + ch) * p;
      for (std::int64_t j = 0; j < p; ++j) ss += (src[j] - mu) * (src[j] - mu);
    }
    const double var = ss / m;
    mean[cu] = mu;
    inv_std[cu] = 1.0 / std::sqrt(var + options.eps);
    const double unbiased = m > 1.0 ? var * m / (m - 1.0) : var;
    stats.running_mean[cu] =
        static_cast<float>((1.0 - options.momentum) * stats.running_mean[cu] + options.momentum * mu);
    stats.running_var[cu] =
        static_cast<float>((1.0 - options.momentum) * stats.running_var[cu] + options.momentum * unbiased);
  }
  std::vector<float> out;
  auto xhat = normalize(x, gamma.data(), beta.data(), mean, inv_std, n, c, p, out);
  return attach_backward(std::move(out), input, gamma, beta, std::move(xhat), std::move(inv_std), true);
}

Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, const BatchNormStats& stats,
                    BatchNormOptions options) {
  check_args(input, gamma, beta, stats, options);
  const std::int64_t n = input.dim(0), c = input.dim(1), p = input.dim(2) * input.dim(3);
  std::vector<double> shift(static_cast<std::size_t>(c)), inv_std(static_cast<std::size_t>(c));
  for (std::size_t ch = 0; ch < shift.size(); ++ch) {
    shift[ch] = stats.running_mean[ch];
    inv_std[ch] = 1.0 / std::sqrt(static_cast<double>(stats.running_var[ch]) + options.eps);
  }
  std::vector<float> out;
  auto xhat = normalize(input.data(), gamma.data(), beta.data(), shift, inv_std, n, c, p, out);
  return attach_backward(std::move(out), input, gamma, beta, std::move(xhat), std::move(inv_std), false);
}

}  // namespace deepgi
