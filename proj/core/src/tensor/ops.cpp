// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deepgi/common/error.hpp"
#include "deepgi/common/random.hpp"
#include "deepgi/tensor/gradcheck.hpp"

namespace deepgi {
namespace {

using Inputs = std::span<const std::shared_ptr<detail::TensorImpl>>;

bool wants_grad(const std::shared_ptr<detail::TensorImpl>& t) { return t && t->requires_grad; }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

/// Elementwise op whose derivative can be written in terms of the input x
/// and the output y.
template <typename F, typename D>
Tensor unary(const char* name, const Tensor& input, F f, D dfdx) {
  const auto x = input.data();
  std::vector<float> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), f);
  return detail::make_result(name, input.shape(), std::move(y), {input},
                             [dfdx](const detail::TensorImpl& self, Inputs in) {
                               if (!wants_grad(in[0])) return;
                               auto& g = in[0]->grad_buffer();
                               const auto& xs = in[0]->data;
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 g[i] += self.grad[i] * dfdx(xs[i], self.data[i]);
                               }
                             });
}

}  // namespace

Tensor leaky_relu(const Tensor& input, float slope) {
  note_kinks(input.data().data(), nullptr, input.data().size());
  return unary(
      "leaky_relu", input, [slope](float x) { return x > 0.0f ? x : slope * x; },
      [slope](float x, float) { return x > 0.0f ? 1.0f : slope; });
}

Tensor relu(const Tensor& input) {
  note_kinks(input.data().data(), nullptr, input.data().size());
  return unary(
      "relu", input, [](float x) { return x > 0.0f ? x : 0.0f; },
      [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor tanh(const Tensor& input) {
  return unary(
      "tanh", input, [](float x) { return std::tanh(x); }, [](float, float y) { return 1.0f - y * y; });
}

Tensor sigmoid(const Tensor& input) {
  return unary(
      "sigmoid", input,
      [](float x) {
        // Split by sign so exp() never overflows.
        if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
        const float e = std::exp(x);
        return e / (1.0f + e);
      },
      [](float, float y) { return y * (1.0f - y); });
}

Tensor activation(const Tensor& input, Activation kind, float slope) {
  switch (kind) {
    case Activation::leaky_relu:
      return leaky_relu(input, slope);
    case Activation::relu:
      return relu(input);
    case Activation::tanh:
      return tanh(input);
    case Activation::sigmoid:
      return sigmoid(input);
  }
  throw ConfigError("activation: unknown kind");
}

Tensor dropout(const Tensor& input, float p, Mode mode, std::uint64_t seed) {
  if (!(p >= 0.0f && p < 1.0f)) throw ConfigError("dropout: p must be in [0, 1), got " + std::to_string(p));
  if (mode == Mode::eval || p == 0.0f) return input;
  const auto x = input.data();
  const float keep_scale = 1.0f / (1.0f - p);
  std::vector<float> mask(x.size());
  std::vector<float> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float u = to_unit_float(hash_keys(seed, i));
    mask[i] = u < p ? 0.0f : keep_scale;
    y[i] = x[i] * mask[i];
  }
  return detail::make_result("dropout", input.shape(), std::move(y), {input},
                             [mask = std::move(mask)](const detail::TensorImpl& self, Inputs in) {
                               if (!wants_grad(in[0])) return;
                               auto& g = in[0]->grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
                             });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 4 || b.rank() != 4) {
    throw ShapeError("concat_channels: inputs must be rank 4, got " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  for (std::size_t axis : {0u, 2u, 3u}) {
    if (a.dim(axis) != b.dim(axis)) {
      throw ShapeError("concat_channels: dimension " + std::to_string(axis) + " differs (" +
                       shape_string(a.shape()) + " vs " + shape_string(b.shape()) + ")");
    }
  }
  const std::int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), p = a.dim(2) * a.dim(3);
  std::vector<float> out(static_cast<std::size_t>(n * (ca + cb) * p));
  const auto da = a.data();
  const auto db = b.data();
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(da.data() + i * ca * p, ca * p, out.data() + i * (ca + cb) * p);
    std::copy_n(db.data() + i * cb * p, cb * p, out.data() + i * (ca + cb) * p + ca * p);
  }
  return detail::make_result("concat_channels", {n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b},
                             [n, ca, cb, p](const detail::TensorImpl& self, Inputs in) {
                               for (std::int64_t i = 0; i < n; ++i) {
                                 const float* src = self.grad.data() + i * (ca + cb) * p;
                                 if (wants_grad(in[0])) {
                                   float* dst = in[0]->grad_buffer().data() + i * ca * p;
                                   for (std::int64_t j = 0; j < ca * p; ++j) dst[j] += src[j];
                                 }
                                 if (wants_grad(in[1])) {
                                   float* dst = in[1]->grad_buffer().data() + i * cb * p;
                                   for (std::int64_t j = 0; j < cb * p; ++j) dst[j] += src[ca * p + j];
                                 }
                               }
                             });
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape("l1_loss", pred, target);
  const auto p = pred.data();
  const auto t = target.data();
  note_kinks(p.data(), t.data(), p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - t[i]);
  const auto count = static_cast<double>(p.size());
  return detail::make_result("l1_loss", {1}, {static_cast<float>(acc / count)}, {pred, target},
                             [count](const detail::TensorImpl& self, Inputs in) {
                               const float scale = static_cast<float>(self.grad[0] / count);
                               const auto& pd = in[0]->data;
                               const auto& td = in[1]->data;
                               if (wants_grad(in[0])) {
                                 auto& g = in[0]->grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                   const float d = pd[i] - td[i];
                                   g[i] += d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
                                 }
                               }
                               if (wants_grad(in[1])) {
                                 auto& g = in[1]->grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) {
                                   const float d = pd[i] - td[i];
                                   g[i] -= d > 0.0f ? scale : (d < 0.0f ? -scale : 0.0f);
                                 }
                               }
                             });
}

Tensor bce_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape("bce_loss", pred, target);
  const auto p = pred.data();
  const auto t = target.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(static_cast<double>(p[i]), double{kBceClamp}, 1.0 - double{kBceClamp});
    acc -= t[i] * std::log(pc) + (1.0 - t[i]) * std::log(1.0 - pc);
  }
  const auto count = static_cast<double>(p.size());
  return detail::make_result("bce_loss", {1}, {static_cast<float>(acc / count)}, {pred, target},
                             [count](const detail::TensorImpl& self, Inputs in) {
                               if (!wants_grad(in[0])) return;
                               auto& g = in[0]->grad_buffer();
                               const auto& pd = in[0]->data;
                               const auto& td = in[1]->data;
                               const double upstream = self.grad[0] / count;
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 const double pc = std::clamp(static_cast<double>(pd[i]), double{kBceClamp},
                                                              1.0 - double{kBceClamp});
                                 g[i] += static_cast<float>(upstream * (pc - td[i]) / (pc * (1.0 - pc)));
                               }
                             });
}

Tensor sum(const Tensor& input) {
  double acc = 0.0;
  for (float v : input.data()) acc += v;
  return detail::make_result("sum", {1}, {static_cast<float>(acc)}, {input},
                             [](const detail::TensorImpl& self, Inputs in) {
                               if (!wants_grad(in[0])) return;
                               for (auto& g : in[0]->grad_buffer()) g += self.grad[0];
                             });
}

Tensor mean(const Tensor& input) {
  double acc = 0.0;
  for (float v : input.data()) acc += v;
  const auto count = static_cast<double>(input.numel());
  return detail::make_result("mean", {1}, {static_cast<float>(acc / count)}, {input},
                             [count](const detail::TensorImpl& self, Inputs in) {
                               if (!wants_grad(in[0])) return;
                               const auto g0 = static_cast<float>(self.grad[0] / count);
                               for (auto& g : in[0]->grad_buffer()) g += g0;
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return detail::make_result("add", a.shape(), std::move(out), {a, b},
                             [](const detail::TensorImpl& self, Inputs in) {
                               for (const auto& t : in) {
                                 if (!wants_grad(t)) continue;
                                 auto& g = t->grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                               }
                             });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  const auto x = a.data();
  const auto y = b.data();
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return detail::make_result("mul", a.shape(), std::move(out), {a, b},
                             [](const detail::TensorImpl& self, Inputs in) {
                               const auto& xs = in[0]->data;
                               const auto& ys = in[1]->data;
                               if (wants_grad(in[0])) {
                                 auto& g = in[0]->grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ys[i];
                               }
                               if (wants_grad(in[1])) {
                                 auto& g = in[1]->grad_buffer();
                                 for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * xs[i];
                               }
                             });
}

Tensor scale(const Tensor& input, float factor) {
  const auto x = input.data();
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return detail::make_result("scale", input.shape(), std::move(out), {input},
                             [factor](const detail::TensorImpl& self, Inputs in) {
                               if (!wants_grad(in[0])) return;
                               auto& g = in[0]->grad_buffer();
                               for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
                             });
}

}  // namespace deepgi
