// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hiprune {

/// Reads a whole file in binary mode. Throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hiprune
