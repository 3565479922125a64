// Copyright 2026 The nas_tc Authors
// SPDX-License-Identifier: Apache-2.0
//
// The nas_tc command line: synth, search, derive, train, eval, audit,
// grad-check. Exit codes: 0 success, 1 usage/validation/IO error, 2 numeric
// abort.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nastc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitNumeric = 2;

// args[0] is the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Parses NAS_TC_THREADS (unset means 1). Throws UsageError on junk.
std::size_t thread_cap();

}  // namespace nastc::cli
