#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pmcoa::util {

// Decodes one UTF-8 code point at `pos`, advancing it. Invalid sequences
// decode as U+FFFD consuming one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos);

bool is_unicode_space(char32_t c) noexcept;

std::size_t code_point_count(std::string_view s);

// Splits on runs of Unicode White_Space.
std::vector<std::string_view> split_unicode_whitespace(std::string_view s);

// Collapses runs of Unicode whitespace to one ASCII space and trims both ends.
std::string collapse_whitespace(std::string_view s);

std::string trim(std::string_view s);

}  // namespace pmcoa::util
