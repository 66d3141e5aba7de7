// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hivtp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitValidation = 2;

/// Runs the `hivtp` command line. `args` excludes the program name.
/// Exit codes: 0 success, 1 I/O failure, 2 validation failure; `verify`
/// also returns 1 when any seed fails.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hivtp::cli
