#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sqlsketch::text {

std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Collapses whitespace runs to one space and lowercases.
std::string normalize_spaces_lower(std::string_view s);

/// Splits on runs of ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view s);

/// Decodes UTF-8 into code points; invalid bytes map to themselves.
std::u32string decode_utf8(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace sqlsketch::text
