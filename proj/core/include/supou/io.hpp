#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace supou {

// Shortest round-trip decimal form; locale independent.
[[nodiscard]] std::string format_double(double v);
// Fixed notation with `digits` after the point.
[[nodiscard]] std::string format_fixed(double v, int digits);

// Whole-string parse; throws InputError on trailing garbage or empty input.
[[nodiscard]] double parse_double(std::string_view s);
[[nodiscard]] long long parse_integer(std::string_view s);

// Splits one CSV record on commas. Quoted fields are not supported.
[[nodiscard]] std::vector<std::string_view> split_csv(std::string_view line);

}  // namespace supou
