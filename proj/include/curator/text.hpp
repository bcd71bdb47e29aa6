#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "curator/config.hpp"

namespace curator {

std::string_view trim(std::string_view s);
bool is_blank(std::string_view s);

// Collapses every whitespace run to a single space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// ASCII-only lowercasing; multi-byte sequences pass through untouched.
std::string casefold_ascii(std::string_view s);

struct Utf8Stats {
    std::size_t code_points = 0;
    std::size_t non_ascii = 0;  // code points outside U+0000..U+007F
};

// Invalid bytes each count as one (non-ASCII) code point.
Utf8Stats utf8_stats(std::string_view s);

// Whitespace-separated tokens as views into `text`.
std::vector<std::string_view> whitespace_tokens(std::string_view text);

// Tokens under the configured mode; character mode yields one token per
// UTF-8 code point.
std::vector<std::string_view> tokenize(std::string_view text, TokenizerMode mode);
std::size_t count_tokens(std::string_view text, TokenizerMode mode);

bool starts_with(std::string_view s, std::string_view prefix);
bool ends_with(std::string_view s, std::string_view suffix);

}  // namespace curator
