// Copyright 2026 The deepgi Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

int main(int argc, char** argv) { return deepgi::cli::run(std::vector<std::string>(argv, argv + argc)); }
