// Copyright Contributors to the vflow Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace vflow {

// SHA-256 (FIPS 180-4) over a byte buffer, returned as lowercase hex.
std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& bytes);

// Digest of a file's contents.
std::string sha256_file(const std::string& path);

}  // namespace vflow
