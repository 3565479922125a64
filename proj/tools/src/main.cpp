// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return nastc::cli::dispatch(args, std::cout, std::cerr);
}
