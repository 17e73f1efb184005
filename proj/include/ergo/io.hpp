#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ergo::io {

/// 17 significant digits, '.' decimal point, locale independent.
std::string format_double(double v);

/// Joins fields with ',' and terminates with '\n'.
std::string csv_row(std::span<const std::string> fields);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

double parse_double(std::string_view s);

}  // namespace ergo::io
