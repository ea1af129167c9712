#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zonecast {

/// Shortest decimal form that round-trips the exact double value.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view text);
std::optional<long> parse_int(std::string_view text);

std::string_view trim(std::string_view s);

/// Splits on ',' with field trimming. No quoting: none of the file formats
/// carry embedded commas.
std::vector<std::string_view> split_csv_line(std::string_view line);

}  // namespace zonecast
