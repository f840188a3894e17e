// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace deepgi {

/// Number of worker threads used by parallel kernels. Defaults to the
/// hardware concurrency, capped by the DEEPGI_THREADS environment variable.
int worker_count();

/// Overrides the worker count for the rest of the process (>= 1). Also
/// forwarded to the BLAS backend.
void set_worker_count(int count);

/// Runs body(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Chunk boundaries only depend on n and the worker count; callers
/// that need scheduling-independent results must not share state across
/// chunks.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace deepgi
