#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace dae {

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of `contents`.
std::string sha256_hex(std::string_view contents);

}  // namespace dae
