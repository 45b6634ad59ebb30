#pragma once
// Internal helpers shared by the library sources; not part of the public API.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace regcov::util {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
// Writes to a sibling temp file, then renames over the target, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string_view trim(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);
// 128-bit FNV-1a rendered as 32 lowercase hex digits; used for cache keys.
std::string fnv1a128_hex(std::string_view data);

std::uint64_t splitmix64(std::uint64_t x);

// "12345" -> "12,345"; used by the human-readable report writers.
std::string with_thousands(long long value);
// Fixed-point decimal with the given number of fraction digits.
std::string fixed(double value, int digits);

}  // namespace regcov::util
