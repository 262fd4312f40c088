#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ensel::csv {

// Plain comma-separated rows: no quoting, fields trimmed, blank lines and
// lines starting with '#' skipped. Line numbers are 1-based physical lines.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

[[nodiscard]] std::vector<std::string> split(std::string_view line);
[[nodiscard]] std::vector<Row> read_rows(std::istream& in);
[[nodiscard]] std::vector<Row> read_file(const std::filesystem::path& path);

[[nodiscard]] double parse_double(std::string_view field, std::size_t line);
[[nodiscard]] long long parse_int(std::string_view field, std::size_t line);

}  // namespace ensel::csv
