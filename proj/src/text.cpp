#include "curator/text.hpp"

#include <cctype>

namespace curator {

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_gap = false;
    for (char c : trim(s)) {
        if (is_space(c)) {
            pending_gap = true;
            continue;
        }
        if (pending_gap && !out.empty()) out.push_back(' ');
        pending_gap = false;
        out.push_back(c);
    }
    return out;
}

std::string casefold_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

Utf8Stats utf8_stats(std::string_view s) {
    Utf8Stats st;
    std::size_t i = 0;
    while (i < s.size()) {
        auto b = static_cast<unsigned char>(s[i]);
        std::size_t len;
        if (b < 0x80) len = 1;
        else if ((b & 0xe0) == 0xc0) len = 2;
        else if ((b & 0xf0) == 0xe0) len = 3;
        else if ((b & 0xf8) == 0xf0) len = 4;
        else len = 0;  // stray continuation / invalid lead byte

        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k)
            ok = (static_cast<unsigned char>(s[i + k]) & 0xc0) == 0x80;

        ++st.code_points;
        if (!ok) {
            // Malformed byte: count it as one non-ASCII code point and resync.
            ++st.non_ascii;
            ++i;
            continue;
        }
        if (len > 1) ++st.non_ascii;
        i += len;
    }
    return st;
}

std::vector<std::string_view> whitespace_tokens(std::string_view s) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) tokens.push_back(s.substr(start, i - start));
    }
    return tokens;
}

std::vector<std::string_view> tokenize(std::string_view s, TokenizerMode mode) {
    if (mode == TokenizerMode::whitespace) return whitespace_tokens(s);
    // Character mode: one token per UTF-8 code point, whitespace included.
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        auto b = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((b & 0xe0) == 0xc0) len = 2;
        else if ((b & 0xf0) == 0xe0) len = 3;
        else if ((b & 0xf8) == 0xf0) len = 4;
        if (i + len > s.size()) len = 1;
        tokens.push_back(s.substr(i, len));
        i += len;
    }
    return tokens;
}

std::size_t count_tokens(std::string_view s, TokenizerMode mode) {
    return tokenize(s, mode).size();
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() &&
           s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace curator
