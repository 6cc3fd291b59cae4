#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace atlas::text {

std::string_view trim(std::string_view s);

// Lower-cases ASCII, trims, and collapses internal whitespace runs to a
// single space. Non-ASCII bytes pass through untouched.
std::string canonicalize(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool iequals(std::string_view a, std::string_view b);

bool starts_with_icase(std::string_view s, std::string_view prefix);

// Shortest decimal form that round-trips, never in exponent notation.
std::string format_double(double v);

std::string format_fixed(double v, int decimals);

}  // namespace atlas::text
