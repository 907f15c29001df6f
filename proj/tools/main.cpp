// Copyright (C) 2026 The RPS Authors
// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

int main(int argc, char** argv) { return rps::cli::run(std::vector<std::string>(argv, argv + argc)); }
