#pragma once

#include <filesystem>
#include <string>

namespace stigp::io {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace stigp::io
