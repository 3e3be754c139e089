#pragma once

// Small text helpers shared by the readers and writers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stepforge::text {

std::string_view trim(std::string_view s) noexcept;
std::string lower(std::string_view s);

/// Splits one delimited line. Double-quoted fields may contain the delimiter
/// and doubled quotes.
std::vector<std::string> split_row(std::string_view line, char delim = ',');

/// Quotes a field if it contains the delimiter, a quote or a line break.
std::string quote_field(std::string_view s, char delim = ',');

std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<long long> parse_int(std::string_view s) noexcept;

/// Empty, "NA" and "." read as missing.
bool is_missing(std::string_view s) noexcept;

/// Shortest representation that parses back to the identical double.
/// NaN is written as "NA".
std::string format_double(double v);

/// Fixed-point rendering for human-facing report columns.
std::string format_fixed(double v, int digits);

}  // namespace stepforge::text
