#include "ensel/csv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>

#include <fmt/format.h>

#include "ensel/error.hpp"

namespace ensel::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    auto piece = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    out.emplace_back(trim(piece));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<Row> read_rows(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    rows.push_back(Row{n, split(t)});
  }
  return rows;
}

std::vector<Row> read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::validation, fmt::format("cannot open '{}'", path.string()));
  return read_rows(in);
}

double parse_double(std::string_view field, std::size_t line) {
  // strtod rather than from_chars: libstdc++ 11 lacks floating from_chars on some targets.
  std::string buf(field);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE)
    throw Error(ErrorKind::validation, fmt::format("line {}: expected a number, got '{}'", line, field));
  return v;
}

long long parse_int(std::string_view field, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
    throw Error(ErrorKind::validation, fmt::format("line {}: expected an integer, got '{}'", line, field));
  return v;
}

}  // namespace ensel::csv
