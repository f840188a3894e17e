// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deepgi/common/error.hpp"
#include "deepgi/common/random.hpp"

namespace deepgi {
namespace {

thread_local KinkTrace* active_trace = nullptr;

std::uint64_t kink_signature(const std::function<Tensor()>& loss_fn, double* value) {
  KinkTrace trace;
  NoGradGuard guard;
  *value = loss_fn().item();
  return trace.signature();
}

}  // namespace

KinkTrace::KinkTrace() {
  if (active_trace) throw ConfigError("KinkTrace: already active on this thread");
  active_trace = this;
}

KinkTrace::~KinkTrace() { active_trace = nullptr; }

void note_kinks(const float* a, const float* b, std::size_t n) {
  if (!active_trace) return;
  std::uint64_t h = hash_keys(active_trace->hash_, n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const float d = b ? a[i] - b[i] : a[i];
    word = (word << 2) | (d > 0.0f ? 1u : (d < 0.0f ? 2u : 0u));
    if (i % 32 == 31) {
      h = hash_keys(h, word);
      word = 0;
    }
  }
  active_trace->hash_ = hash_keys(h, word);
}

GradCheckResult gradient_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> wrt,
                               const GradCheckOptions& options) {
  for (auto& t : wrt) {
    if (!t.is_leaf() || !t.requires_grad()) throw ConfigError("gradient_check: wrt tensors must be leaves with requires_grad");
    t.zero_grad();
  }
  loss_fn().backward();
  double base_value = 0.0;
  const auto base_signature = kink_signature(loss_fn, &base_value);

  SplitMix64 rng(options.seed);
  double diff_sq = 0.0, analytic_sq = 0.0, numeric_sq = 0.0;
  GradCheckResult result;

  for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
    auto& t = wrt[ti];
    const auto n = static_cast<std::size_t>(t.numel());
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (n > options.max_elements_per_tensor) {
      for (std::size_t i = 0; i < options.max_elements_per_tensor; ++i) {
        const auto j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(indices[i], indices[j]);
      }
      indices.resize(options.max_elements_per_tensor);
    }
    const std::vector<float> analytic = t.has_grad() ? std::vector<float>(t.grad().begin(), t.grad().end())
                                                     : std::vector<float>(n, 0.0f);
    auto data = t.mutable_data();
    for (auto idx : indices) {
      const float original = data[idx];
      const float plus = static_cast<float>(original + options.step);
      const float minus = static_cast<float>(original - options.step);
      double f_plus, f_minus;
      data[idx] = plus;
      const auto sig_plus = kink_signature(loss_fn, &f_plus);
      data[idx] = minus;
      const auto sig_minus = kink_signature(loss_fn, &f_minus);
      data[idx] = original;
      if (options.skip_kinks && (sig_plus != base_signature || sig_minus != base_signature)) {
        ++result.elements_skipped;
        continue;
      }
      const double numeric = (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
      const double a = analytic[idx];
      const double err = std::abs(a - numeric);
      diff_sq += err * err;
      analytic_sq += a * a;
      numeric_sq += numeric * numeric;
      if (err > result.max_abs_error) {
        result.max_abs_error = err;
        result.worst_element = "tensor " + std::to_string(ti) + " element " + std::to_string(idx) +
                               ": analytic " + std::to_string(a) + " numeric " + std::to_string(numeric);
      }
      ++result.elements_checked;
    }
  }
  const double denom = std::max({std::sqrt(analytic_sq), std::sqrt(numeric_sq), 1e-12});
  result.relative_error = std::sqrt(diff_sq) / denom;
  for (auto& t : wrt) t.zero_grad();
  return result;
}

}  // namespace deepgi
