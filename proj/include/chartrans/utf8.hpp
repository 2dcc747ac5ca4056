#pragma once

#include <string>
#include <string_view>

namespace chartrans::utf8 {

// Decodes UTF-8 into Unicode scalar values. Throws FormatError on malformed
// input (overlongs, surrogates, truncated sequences).
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
std::string encode(char32_t cp);

// Number of scalar values in a valid UTF-8 string.
std::size_t length(std::string_view text);

// First `n` scalar values of `text`, never splitting a multi-byte character.
std::string prefix(std::string_view text, std::size_t n);

}  // namespace chartrans::utf8
