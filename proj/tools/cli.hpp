// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hiprune::cli {

enum ExitCode : int {
    kSuccess = 0,
    kValidationError = 2,
    kIoError = 3,
};

/// Runs `hiprune <subcommand> [flags]`. `args` excludes the program name.
/// Machine output for `--out -` goes to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hiprune::cli
