#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace archint::text {

std::string trim(std::string_view s);

/// Trims and replaces every run of ASCII whitespace with a single space.
std::string collapse_whitespace(std::string_view s);

std::string to_lower(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

/// Percent-encodes every byte outside the RFC 3986 unreserved set.
std::string percent_encode(std::string_view s);

/// Percent-encodes only the bytes listed in `reserved` plus '%'.
std::string percent_encode_only(std::string_view s, std::string_view reserved);

std::string percent_decode(std::string_view s);

using Instant = std::chrono::sys_seconds;

/// `YYYY-MM-DDThh:mm:ssZ`
std::string format_utc(Instant t);

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDThh:mm:ssZ` and the same with a numeric
/// offset or fractional seconds (fraction is dropped).
std::optional<Instant> parse_utc(std::string_view s);

Instant now_utc();

}  // namespace archint::text
