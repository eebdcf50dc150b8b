#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qhydro/errors.hpp"

namespace qhydro::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split_line(std::string_view line, char sep = ',') {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.emplace_back(trim(line.substr(pos, next == std::string_view::npos ? next : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Shortest representation that round-trips; "NA" for missing values.
inline std::string num(double v) {
  if (std::isnan(v)) return "NA";
  return fmt::format("{}", v);
}

/// Rows of a comma-separated file. Lines starting with '#' are skipped; the
/// first remaining line is the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }

  std::size_t require(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw SchemaError(fmt::format("missing column '{}'", name));
  }
};

inline Table read_table(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = split_line(body);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
    } else {
      t.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw SchemaError("empty file: no header row");
  return t;
}

inline Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_table(in);
}

}  // namespace qhydro::csv
