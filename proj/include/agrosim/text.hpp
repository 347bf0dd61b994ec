#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace agrosim {

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

/// Strict parse of a full string as double; throws ValidationError naming `what`.
double parse_double(std::string_view text, std::string_view what);
long parse_long(std::string_view text, std::string_view what);

std::vector<std::string> split(std::string_view text, char sep);
std::string trim(std::string_view text);

/// ISO calendar dates, YYYY-MM-DD.
std::chrono::sys_days parse_date(std::string_view text);
std::string format_date(std::chrono::sys_days d);
int day_of_year(std::chrono::sys_days d);
int year_of(std::chrono::sys_days d);
std::chrono::sys_days jan1(int year);

}  // namespace agrosim
