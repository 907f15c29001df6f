// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace rps::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitConfig = 3,
  kExitDataShape = 4,
};

/// Entry point shared by the executable and the tests; `args[0]` is the program name.
int run(const std::vector<std::string>& args);

}  // namespace rps::cli
