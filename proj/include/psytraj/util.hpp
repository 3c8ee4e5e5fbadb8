// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace psytraj {

// Shortest decimal representation that parses back to the same double.
std::string fmt_double(double v);

// CRC-32 (IEEE polynomial, zlib-compatible). `state` allows streaming.
uint32_t crc32(const void* data, size_t n, uint32_t state = 0);

std::string crc32_hex(uint32_t crc);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const void* data, size_t n);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace psytraj
