// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "deepgi/common/parallel.hpp"

#include <cblas.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace deepgi {
namespace {

int initial_worker_count() {
  int count = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("DEEPGI_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) count = std::min(count, cap);
    } catch (const std::exception&) {
      // unparsable value: keep the hardware default
    }
  }
  openblas_set_num_threads(count);
  return count;
}

std::atomic<int>& worker_count_storage() {
  static std::atomic<int> count{initial_worker_count()};
  return count;
}

}  // namespace

int worker_count() { return worker_count_storage().load(std::memory_order_relaxed); }

void set_worker_count(int count) {
  count = std::max(1, count);
  worker_count_storage().store(count, std::memory_order_relaxed);
  openblas_set_num_threads(count);
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  const auto workers = static_cast<std::int64_t>(std::min<std::int64_t>(worker_count(), n));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  threads.reserve(static_cast<std::size_t>(workers - 1));
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  try {
    body(0, std::min(n, chunk));
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace deepgi
