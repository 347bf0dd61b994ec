#include "agrosim/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "agrosim/error.hpp"

namespace agrosim {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("invalid number for " + std::string(what) + ": '" + s + "'");
  }
  return v;
}

long parse_long(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("invalid integer for " + std::string(what) + ": '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::chrono::sys_days parse_date(std::string_view text) {
  const std::string s = trim(text);
  const auto parts = split(s, '-');
  if (parts.size() != 3 || parts[0].size() != 4 || parts[1].size() != 2 || parts[2].size() != 2) {
    throw ValidationError("invalid date '" + s + "', expected YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{
      std::chrono::year{static_cast<int>(parse_long(parts[0], "year"))},
      std::chrono::month{static_cast<unsigned>(parse_long(parts[1], "month"))},
      std::chrono::day{static_cast<unsigned>(parse_long(parts[2], "day"))}};
  if (!ymd.ok()) throw ValidationError("invalid date '" + s + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(std::chrono::sys_days d) {
  return static_cast<int>(std::chrono::year_month_day{d}.year());
}

std::chrono::sys_days jan1(int year) {
  return std::chrono::sys_days{std::chrono::year{year} / std::chrono::January / 1};
}

int day_of_year(std::chrono::sys_days d) {
  return static_cast<int>((d - jan1(year_of(d))).count()) + 1;
}

}  // namespace agrosim
