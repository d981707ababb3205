#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dtwcert {

/// Shortest decimal string that parses back to exactly `value` ("inf", "-inf", "nan" otherwise).
std::string format_double(double value);

/// Strict full-string parse; surrounding ASCII whitespace is ignored.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace dtwcert
