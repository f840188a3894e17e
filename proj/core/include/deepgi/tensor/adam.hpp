// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "deepgi/tensor/tensor.hpp"

namespace deepgi {

struct AdamOptions {
  float lr = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// First and second moments per parameter (same length as the parameter).
struct AdamState {
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  std::uint64_t step_count = 0;

  /// Zero moments matching `params`.
  static AdamState zeros_like(const std::vector<Tensor>& params);
};

/// One bias-corrected Adam update of every parameter from its current
/// gradient. Parameters without a gradient buffer are treated as having a
/// zero gradient. Throws ConfigError if lr <= 0 and ShapeError if `state`
/// does not match `params`.
void adam_step(std::vector<Tensor>& params, AdamState& state, const AdamOptions& options);

/// Convenience owner of a parameter list and its Adam state.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  void step();
  void zero_grad();

  const std::vector<Tensor>& params() const { return params_; }
  const AdamOptions& options() const { return options_; }
  AdamState& state() { return state_; }
  const AdamState& state() const { return state_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  AdamState state_;
};

}  // namespace deepgi
