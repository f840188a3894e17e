// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

namespace deepgi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point behind the `deepgi` binary. `args[0]` is the program name.
/// Logs go to stderr; eval and selftest print their report on stdout. When
/// given, `resolved_config` receives the logged configuration (JSON).
int run(const std::vector<std::string>& args, std::string* resolved_config = nullptr);

}  // namespace deepgi::cli
