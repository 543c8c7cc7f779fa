// Copyright (c) 2026 RTF-Net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace rtfnet {

/// Reads a whole file as bytes; throws on failure.
std::string read_file(const std::string& path);

/// Writes bytes via a temp file plus rename, so interrupted runs never leave
/// truncated artifacts at the destination path.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace rtfnet
