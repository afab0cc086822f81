#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pml::io {

/// Round-trip text form of a double: 17 significant digits.
std::string format_real(double v);

double parse_real(std::string_view text);

std::vector<std::string> split_csv_line(std::string_view line);

/// Reads a CSV file into rows of fields; the header row is returned first.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

/// Writes to `<path>.tmp` and renames over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace pml::io
