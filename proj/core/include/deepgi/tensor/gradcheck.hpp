// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deepgi/tensor/tensor.hpp"

namespace deepgi {

struct GradCheckOptions {
  double step = 1e-3;
  /// Elements sampled per tensor; tensors at or below this size are checked
  /// exhaustively.
  std::size_t max_elements_per_tensor = 48;
  std::uint64_t seed = 0x5eed;
  /// Skip elements whose +-step evaluations change the sign pattern of any
  /// ReLU, LeakyReLU or L1 residual input: the loss is not differentiable
  /// between them and the central difference is meaningless there.
  bool skip_kinks = false;
};

struct GradCheckResult {
  /// ||analytic - numeric|| / max(||analytic||, ||numeric||) over all
  /// checked elements.
  double relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t elements_checked = 0;
  std::size_t elements_skipped = 0;  // straddled a kink (skip_kinks only)
  std::string worst_element;

  bool passed(double tolerance) const { return relative_error < tolerance; }
};

/// While alive, ops with a kink at zero fold the sign pattern of their
/// inputs into signature(). One per thread at a time.
class KinkTrace {
 public:
  KinkTrace();
  ~KinkTrace();
  KinkTrace(const KinkTrace&) = delete;
  KinkTrace& operator=(const KinkTrace&) = delete;

  std::uint64_t signature() const { return hash_; }

 private:
  friend void note_kinks(const float* a, const float* b, std::size_t n);
  std::uint64_t hash_ = 0;
};

/// Records sign(a - b) (b may be null, meaning 0) when a KinkTrace is alive.
void note_kinks(const float* a, const float* b, std::size_t n);

/// Compares reverse-mode gradients of `loss_fn` with respect to the leaf
/// tensors in `wrt` against central finite differences. `loss_fn` must be a
/// pure function of the current tensor values (seed any randomness inside
/// it). The leaves are restored to their original values afterwards.
GradCheckResult gradient_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> wrt,
                               const GradCheckOptions& options = {});

}  // namespace deepgi
