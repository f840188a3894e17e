// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/tensor/adam.hpp"

#include <cmath>
#include <string>

#include "deepgi/common/error.hpp"

namespace deepgi {

AdamState AdamState::zeros_like(const std::vector<Tensor>& params) {
  AdamState state;
  for (const auto& p : params) {
    state.first_moment.emplace_back(static_cast<std::size_t>(p.numel()), 0.0f);
    state.second_moment.emplace_back(static_cast<std::size_t>(p.numel()), 0.0f);
  }
  return state;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamOptions& options) {
  if (!(options.lr > 0.0f)) throw ConfigError("adam: learning rate must be > 0, got " + std::to_string(options.lr));
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ShapeError("adam: state tracks " + std::to_string(state.first_moment.size()) + " parameters, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<std::size_t>(params[i].numel());
    if (state.first_moment[i].size() != n || state.second_moment[i].size() != n) {
      throw ShapeError("adam: moment size mismatch for parameter " + std::to_string(i));
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(static_cast<double>(options.beta1), t);
  const double bias2 = 1.0 - std::pow(static_cast<double>(options.beta2), t);
  const float step_size = static_cast<float>(options.lr / bias1);
  const float inv_sqrt_bias2 = static_cast<float>(1.0 / std::sqrt(bias2));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.has_grad()) continue;
    auto data = p.mutable_data();
    const auto grad = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const float g = grad[j];
      m[j] = options.beta1 * m[j] + (1.0f - options.beta1) * g;
      v[j] = options.beta2 * v[j] + (1.0f - options.beta2) * g * g;
      data[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bias2 + options.eps);
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options), state_(AdamState::zeros_like(params_)) {}

void Adam::step() { adam_step(params_, state_, options_); }

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace deepgi
