#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace treecert {

/// Shortest decimal form that round-trips back to the same double.
std::string format_double(double v);

std::string trim(std::string_view s);

/// Trim and collapse internal whitespace runs to single spaces. Used to
/// normalize raw category strings before unification lookups.
std::string collapse_whitespace(std::string_view s);

/// Strict integer parse of the whole string (optional leading +/-).
std::optional<long long> parse_int(std::string_view s);

/// Strict finite-double parse of the whole string.
std::optional<double> parse_double(std::string_view s);

}  // namespace treecert
