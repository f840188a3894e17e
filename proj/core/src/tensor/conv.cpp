// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

// Convolution and transposed convolution via im2col + sgemm. The batch is
// folded into the GEMM's column dimension: column matrices are
// (C * k * k) x (N * Ho * Wo), column index n * Ho * Wo + y * Wo + x.

#include <algorithm>
#include <string>

#include "deepgi/common/error.hpp"
#include "deepgi/common/parallel.hpp"
#include "deepgi/tensor/ops.hpp"
#include "gemm.hpp"

namespace deepgi {
namespace {

struct Geometry {
  std::int64_t n, c, h, w;     // image side
  std::int64_t k;              // square kernel
  int stride, pad;
  std::int64_t gh, gw;         // column grid (conv output / transposed-conv input)

  std::int64_t rows() const { return c * k * k; }
  std::int64_t cols() const { return n * gh * gw; }
};

void im2col(const float* image, const Geometry& g, float* cols) {
  const std::int64_t plane = g.gh * g.gw;
  const std::int64_t ncols = g.cols();
  parallel_for(g.c, [&](std::int64_t c0, std::int64_t c1) {
    for (std::int64_t c = c0; c < c1; ++c) {
      for (std::int64_t ky = 0; ky < g.k; ++ky) {
        for (std::int64_t kx = 0; kx < g.k; ++kx) {
          float* row = cols + ((c * g.k + ky) * g.k + kx) * ncols;
          for (std::int64_t n = 0; n < g.n; ++n) {
            const float* src = image + (n * g.c + c) * g.h * g.w;
            float* dst = row + n * plane;
            for (std::int64_t oy = 0; oy < g.gh; ++oy) {
              const std::int64_t iy = oy * g.stride - g.pad + ky;
              float* out = dst + oy * g.gw;
              if (iy < 0 || iy >= g.h) {
                std::fill(out, out + g.gw, 0.0f);
                continue;
              }
              const float* in_row = src + iy * g.w;
              for (std::int64_t ox = 0; ox < g.gw; ++ox) {
                const std::int64_t ix = ox * g.stride - g.pad + kx;
                out[ox] = (ix >= 0 && ix < g.w) ? in_row[ix] : 0.0f;
              }
            }
          }
        }
      }
    }
  });
}

/// Scatter-adds a column matrix back onto an image (the adjoint of im2col).
void col2im(const float* cols, const Geometry& g, float* image) {
  const std::int64_t plane = g.gh * g.gw;
  const std::int64_t ncols = g.cols();
  // Parallel over channels: each channel owns disjoint image planes.
  parallel_for(g.c, [&](std::int64_t c0, std::int64_t c1) {
    for (std::int64_t c = c0; c < c1; ++c) {
      for (std::int64_t ky = 0; ky < g.k; ++ky) {
        for (std::int64_t kx = 0; kx < g.k; ++kx) {
          const float* row = cols + ((c * g.k + ky) * g.k + kx) * ncols;
          for (std::int64_t n = 0; n < g.n; ++n) {
            float* dst = image + (n * g.c + c) * g.h * g.w;
            const float* src = row + n * plane;
            for (std::int64_t oy = 0; oy < g.gh; ++oy) {
              const std::int64_t iy = oy * g.stride - g.pad + ky;
              if (iy < 0 || iy >= g.h) continue;
              float* out_row = dst + iy * g.w;
              const float* in = src + oy * g.gw;
              for (std::int64_t ox = 0; ox < g.gw; ++ox) {
                const std::int64_t ix = ox * g.stride - g.pad + kx;
                if (ix >= 0 && ix < g.w) out_row[ix] += in[ox];
              }
            }
          }
        }
      }
    }
  });
}

/// N x C x P  ->  C x (N * P)
std::vector<float> to_channel_major(std::span<const float> x, std::int64_t n, std::int64_t c, std::int64_t p) {
  std::vector<float> out(x.size());
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      std::copy_n(x.data() + (i * c + ch) * p, p, out.data() + ch * n * p + i * p);
    }
  }
  return out;
}

/// C x (N * P)  ->  N x C x P, accumulating into `out`.
void add_from_channel_major(std::span<const float> x, std::int64_t n, std::int64_t c, std::int64_t p,
                            std::span<float> out) {
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const float* src = x.data() + ch * n * p + i * p;
      float* dst = out.data() + (i * c + ch) * p;
      for (std::int64_t j = 0; j < p; ++j) dst[j] += src[j];
    }
  }
}

void check_common(const char* op, const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                  int pad, std::int64_t bias_channels, std::int64_t weight_in_channels) {
  const std::string name(op);
  if (input.rank() != 4) {
    throw ShapeError(name + ": input must be N x C x H x W, got " + shape_string(input.shape()));
  }
  if (weight.rank() != 4) throw ShapeError(name + ": weight must be rank 4, got " + shape_string(weight.shape()));
  if (weight.dim(2) != weight.dim(3)) {
    throw ShapeError(name + ": kernel must be square, got " + shape_string(weight.shape()));
  }
  if (stride < 1) throw ShapeError(name + ": stride must be >= 1");
  if (pad < 0) throw ShapeError(name + ": pad must be >= 0");
  if (weight_in_channels != input.dim(1)) {
    throw ShapeError(name + ": input channel dimension (dim 1) is " + std::to_string(input.dim(1)) +
                     " but weight expects " + std::to_string(weight_in_channels));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != bias_channels)) {
    throw ShapeError(name + ": bias must have shape [" + std::to_string(bias_channels) + "], got " +
                     shape_string(bias.shape()));
  }
}

void add_bias(std::span<float> out, const Tensor& bias, std::int64_t n, std::int64_t c, std::int64_t p) {
  if (!bias.defined()) return;
  const auto b = bias.data();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      float* dst = out.data() + (i * c + ch) * p;
      for (std::int64_t j = 0; j < p; ++j) dst[j] += b[static_cast<std::size_t>(ch)];
    }
  }
}

void accumulate_bias_grad(detail::TensorImpl& bias, std::span<const float> grad_out, std::int64_t n,
                          std::int64_t c, std::int64_t p) {
  auto& g = bias.grad_buffer();
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const float* src = grad_out.data() + (i * c + ch) * p;
      for (std::int64_t j = 0; j < p; ++j) acc += src[j];
    }
    g[static_cast<std::size_t>(ch)] += static_cast<float>(acc);
  }
}

bool wants_grad(const std::shared_ptr<detail::TensorImpl>& t) { return t && t->requires_grad; }

}  // namespace

std::int64_t conv_output_size(std::int64_t in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

std::int64_t conv_transpose_output_size(std::int64_t in, int kernel, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + kernel;
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  check_common("conv2d", input, weight, bias, stride, pad, weight.defined() ? weight.dim(0) : 0,
               weight.defined() && weight.rank() == 4 ? weight.dim(1) : -1);
  const std::int64_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(0), k = weight.dim(2);
  if (h + 2 * pad < k || w + 2 * pad < k) {
    throw ShapeError("conv2d: padded input height/width (" + std::to_string(h + 2 * pad) + "x" +
                     std::to_string(w + 2 * pad) + ") smaller than kernel " + std::to_string(k));
  }
  const std::int64_t ho = conv_output_size(h, static_cast<int>(k), stride, pad);
  const std::int64_t wo = conv_output_size(w, static_cast<int>(k), stride, pad);
  const Geometry g{n, cin, h, w, k, stride, pad, ho, wo};
  const std::int64_t p = ho * wo;

  std::vector<float> cols(static_cast<std::size_t>(g.rows() * g.cols()));
  im2col(input.data().data(), g, cols.data());
  std::vector<float> outmat(static_cast<std::size_t>(cout * g.cols()));
  detail::gemm(false, false, cout, g.cols(), g.rows(), 1.0f, weight.data().data(), cols.data(), 0.0f,
               outmat.data());
  std::vector<float> out(static_cast<std::size_t>(n * cout * p), 0.0f);
  add_from_channel_major(outmat, n, cout, p, out);
  add_bias(out, bias, n, cout, p);

  return detail::make_result(
      "conv2d", {n, cout, ho, wo}, std::move(out), {input, weight, bias},
      [g, cout, p](const detail::TensorImpl& self, std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        const auto& x = in[0];
        const auto& wt = in[1];
        const auto& b = in[2];
        const auto dout = to_channel_major(self.grad, g.n, cout, p);
        if (wants_grad(wt)) {
          std::vector<float> cols(static_cast<std::size_t>(g.rows() * g.cols()));
          im2col(x->data.data(), g, cols.data());
          detail::gemm(false, true, cout, g.rows(), g.cols(), 1.0f, dout.data(), cols.data(), 1.0f,
                       wt->grad_buffer().data());
        }
        if (wants_grad(x)) {
          std::vector<float> dcols(static_cast<std::size_t>(g.rows() * g.cols()));
          detail::gemm(true, false, g.rows(), g.cols(), cout, 1.0f, wt->data.data(), dout.data(), 0.0f,
                       dcols.data());
          col2im(dcols.data(), g, x->grad_buffer().data());
        }
        if (wants_grad(b)) accumulate_bias_grad(*b, self.grad, g.n, cout, p);
      });
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  check_common("conv_transpose2d", input, weight, bias, stride, pad,
               weight.defined() && weight.rank() == 4 ? weight.dim(1) : 0,
               weight.defined() && weight.rank() == 4 ? weight.dim(0) : -1);
  const std::int64_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(1), k = weight.dim(2);
  const std::int64_t ho = conv_transpose_output_size(h, static_cast<int>(k), stride, pad);
  const std::int64_t wo = conv_transpose_output_size(w, static_cast<int>(k), stride, pad);
  if (ho < 1 || wo < 1) {
    throw ShapeError("conv_transpose2d: output height/width would be " + std::to_string(ho) + "x" +
                     std::to_string(wo));
  }
  if (conv_output_size(ho, static_cast<int>(k), stride, pad) != h ||
      conv_output_size(wo, static_cast<int>(k), stride, pad) != w) {
    throw ShapeError("conv_transpose2d: geometry is not the adjoint of a conv2d (stride/pad/kernel mismatch)");
  }
  // Image side is the output; the column grid is the input.
  const Geometry g{n, cout, ho, wo, k, stride, pad, h, w};
  const std::int64_t p_in = h * w;
  const std::int64_t p_out = ho * wo;

  const auto xmat = to_channel_major(input.data(), n, cin, p_in);
  std::vector<float> cols(static_cast<std::size_t>(g.rows() * g.cols()));
  detail::gemm(true, false, g.rows(), g.cols(), cin, 1.0f, weight.data().data(), xmat.data(), 0.0f,
               cols.data());
  std::vector<float> out(static_cast<std::size_t>(n * cout * p_out), 0.0f);
  col2im(cols.data(), g, out.data());
  add_bias(out, bias, n, cout, p_out);

  return detail::make_result(
      "conv_transpose2d", {n, cout, ho, wo}, std::move(out), {input, weight, bias},
      [g, cin, p_in, p_out](const detail::TensorImpl& self,
                            std::span<const std::shared_ptr<detail::TensorImpl>> in) {
        const auto& x = in[0];
        const auto& wt = in[1];
        const auto& b = in[2];
        std::vector<float> dcols(static_cast<std::size_t>(g.rows() * g.cols()));
        im2col(self.grad.data(), g, dcols.data());
        if (wants_grad(wt)) {
          const auto xmat = to_channel_major(x->data, g.n, cin, p_in);
          detail::gemm(false, true, cin, g.rows(), g.cols(), 1.0f, xmat.data(), dcols.data(), 1.0f,
                       wt->grad_buffer().data());
        }
        if (wants_grad(x)) {
          std::vector<float> dxmat(static_cast<std::size_t>(cin * g.cols()));
          detail::gemm(false, false, cin, g.cols(), g.rows(), 1.0f, wt->data.data(), dcols.data(), 0.0f,
                       dxmat.data());
          add_from_channel_major(dxmat, g.n, cin, p_in, x->grad_buffer());
        }
        if (wants_grad(b)) accumulate_bias_grad(*b, self.grad, g.n, g.c, p_out);
      });
}

}  // namespace deepgi
