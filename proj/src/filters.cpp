#include "curator/filters.hpp"

#include <string>

#include "curator/text.hpp"

namespace curator {

std::string normalize_for_dedup(std::string_view query) {
    return collapse_whitespace(query);
}

bool DedupSet::insert_if_new(const QueryRecord& record) {
    return insert_key(key_for(record));
}

bool DedupSet::insert_key(const Digest128& key) {
    return seen_.insert(key).second;
}

Digest128 DedupSet::key_for(const QueryRecord& record) {
    return murmur3_128(normalize_for_dedup(query_text(record)));
}

double unicode_ratio(std::string_view text) {
    Utf8Stats st = utf8_stats(text);
    if (st.code_points == 0) return 0.0;
    return static_cast<double>(st.non_ascii) / static_cast<double>(st.code_points);
}

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string_view::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

bool is_truncated(std::string_view query) {
    std::string_view t = trim(query);
    if (ends_with(t, "\xe2\x80\xa6")) return true;  // trailing ellipsis
    return count_occurrences(t, "```") % 2 != 0;    // unbalanced code fence
}

bool has_url(std::string_view query) {
    if (query.find("http://") != std::string_view::npos) return true;
    if (query.find("https://") != std::string_view::npos) return true;
    for (std::string_view tok : whitespace_tokens(query))
        if (starts_with(tok, "www.")) return true;
    return false;
}

bool has_table(std::string_view query) {
    std::string lower = casefold_ascii(query);
    if (lower.find("<table") != std::string::npos) return true;
    std::size_t pipe_lines = 0;
    std::size_t start = 0;
    while (start <= query.size()) {
        std::size_t end = query.find('\n', start);
        if (end == std::string_view::npos) end = query.size();
        std::string_view line = query.substr(start, end - start);
        std::size_t pipes = 0;
        for (char c : line)
            if (c == '|') ++pipes;
        if (pipes >= 2) ++pipe_lines;
        start = end + 1;
    }
    return pipe_lines >= 2;
}

}  // namespace

SelectionDecision filter_hygiene(const QueryRecord& record,
                                 const PipelineConfig& config) {
    std::string query = query_text(record);
    if (unicode_ratio(query) > config.unicode_ratio_max)
        return discard_decision("filter", "unicode_ratio");
    if (is_blank(query) || is_truncated(query))
        return discard_decision("filter", "incomplete");
    if (has_url(query) || has_table(query))
        return discard_decision("filter", "special_content");
    return retain_decision("filter");
}

}  // namespace curator
