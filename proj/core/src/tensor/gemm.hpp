// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace deepgi::detail {

/// Row-major C = alpha * op(A) * op(B) + beta * C, where op(A) is M x K and
/// op(B) is K x N.
void gemm(bool trans_a, bool trans_b, std::int64_t m, std::int64_t n, std::int64_t k, float alpha,
          const float* a, const float* b, float beta, float* c);

}  // namespace deepgi::detail
