#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace qhydro {

// Proleptic Gregorian day; leap days are kept.
using Date = std::chrono::sys_days;

inline std::optional<Date> try_parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  std::string buf(text);
  if (std::sscanf(buf.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

inline std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

/// Day of year in 1..366.
inline int day_of_year(Date date) {
  const std::chrono::year_month_day ymd{date};
  const Date jan1{ymd.year() / std::chrono::January / 1};
  return static_cast<int>((date - jan1).count()) + 1;
}

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// Inclusive range of days.
struct DateRange {
  Date first;
  Date last;

  long days() const { return static_cast<long>((last - first).count()) + 1; }
  bool contains(Date d) const { return first <= d && d <= last; }
  bool operator==(const DateRange&) const = default;
};

}  // namespace qhydro
