#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace basesql {

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every occurrence of `from` in `text` with `to`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string fnv1a_hex(std::string_view data);

/// Shortest decimal form that round-trips back to the same double.
/// Integral values drop the fractional part entirely ("5", not "5.0").
std::string format_double(double v);

/// Caps `s` at `max_chars` characters; longer strings keep a prefix and end
/// with "..." so the result is exactly `max_chars` long.
std::string truncate_with_ellipsis(std::string_view s, std::size_t max_chars);

}  // namespace basesql
