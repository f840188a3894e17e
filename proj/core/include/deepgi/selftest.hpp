// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace deepgi::selftest {

struct Check {
  std::string name;
  double value = 0.0;  // measured error, or the measured quantity
  double limit = 0.0;  // passes when value < limit
  bool passed = false;
  std::string detail;  // shown on failure
  std::string note;    // always shown
};

struct Report {
  std::vector<Check> checks;

  bool passed() const;
  /// One "PASS name value < limit" line per check.
  std::string format() const;
};

/// Relative error of reverse-mode against central finite differences
/// (h = 1e-3), worst of `instances` random instances per op, plus the
/// composed generator loss on a 1 x 12 x 16 x 16 input at depth 4.
Report gradient_suite(int instances = 3);

struct RendererSuiteOptions {
  int sky_spp = 1024;
};

/// Closed-form renderer cases: head-on Lambert wall, shadowed pixel, plane
/// under a uniform sky, one-bounce path trace against the direct pass.
Report renderer_suite(const RendererSuiteOptions& options = {});

}  // namespace deepgi::selftest
