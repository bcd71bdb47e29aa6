#include "curator/quality.hpp"

#include <algorithm>

#include "curator/text.hpp"
#include "curator/verify.hpp"

namespace curator {

namespace {

// Windows are fingerprinted over per-token 64-bit hashes instead of the
// joined string: no allocation per window, and the exact re-count pass
// neutralizes both murmur and per-token collisions.
std::vector<std::uint64_t> token_hashes(const std::vector<std::string_view>& tokens) {
    std::vector<std::uint64_t> hashes(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) hashes[i] = fnv1a64(tokens[i]);
    return hashes;
}

std::vector<Digest128> fingerprints(const std::vector<std::uint64_t>& hashes,
                                    std::size_t n) {
    std::vector<Digest128> fps;
    if (hashes.size() < n) return fps;
    fps.reserve(hashes.size() - n + 1);
    for (std::size_t start = 0; start + n <= hashes.size(); ++start)
        fps.push_back(murmur3_128(hashes.data() + start, n * sizeof(std::uint64_t)));
    return fps;
}

}  // namespace

std::vector<std::string> ngram_texts(const QueryRecord& record) {
    std::vector<std::string> texts;
    texts.reserve(record.responses.size() * 2);
    for (const Response& r : record.responses) {
        ThinkAnswer ta = effective_think_answer(r);
        texts.push_back(std::move(ta.think));
        texts.push_back(std::move(ta.answer));
    }
    return texts;
}

std::string NgramIndex::window_key(const std::vector<std::string_view>& tokens,
                                   std::size_t start, std::size_t n) {
    std::string key;
    std::size_t bytes = n;  // separators
    for (std::size_t i = 0; i < n; ++i) bytes += tokens[start + i].size();
    key.reserve(bytes);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) key.push_back('\x1f');
        key.append(tokens[start + i]);
    }
    return key;
}

std::uint64_t NgramIndex::window_count(std::string_view window_key) const {
    auto exact = exact_counts_.find(std::string(window_key));
    if (exact != exact_counts_.end()) return exact->second;

    // Recompute the fingerprint the way the build did: per-token hashes.
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (start <= window_key.size()) {
        std::size_t end = window_key.find('\x1f', start);
        if (end == std::string_view::npos) end = window_key.size();
        tokens.push_back(window_key.substr(start, end - start));
        if (end == window_key.size()) break;
        start = end + 1;
    }
    std::vector<std::uint64_t> hashes = token_hashes(tokens);
    if (hashes.size() != static_cast<std::size_t>(n_)) return 0;
    Digest128 fp = murmur3_128(hashes.data(), hashes.size() * sizeof(std::uint64_t));
    auto it = std::lower_bound(fingerprints_.begin(), fingerprints_.end(), fp);
    if (it == fingerprints_.end() || !(*it == fp)) return 0;
    return counts_[static_cast<std::size_t>(it - fingerprints_.begin())];
}

std::uint64_t NgramIndex::max_window_count(std::string_view text) const {
    auto tokens = tokenize(text, mode_);
    if (tokens.size() < static_cast<std::size_t>(n_)) return 0;
    auto hashes = token_hashes(tokens);
    std::uint64_t best = 0;
    for (std::size_t start = 0; start + n_ <= hashes.size(); ++start) {
        Digest128 fp = murmur3_128(hashes.data() + start,
                                   static_cast<std::size_t>(n_) * sizeof(std::uint64_t));
        auto it = std::lower_bound(fingerprints_.begin(), fingerprints_.end(), fp);
        if (it == fingerprints_.end() || !(*it == fp)) continue;
        std::uint64_t count = counts_[static_cast<std::size_t>(it - fingerprints_.begin())];
        if (count > flag_threshold_) {
            // Candidate window: the exact table is authoritative.
            auto exact = exact_counts_.find(
                window_key(tokens, start, static_cast<std::size_t>(n_)));
            count = exact == exact_counts_.end() ? 0 : exact->second;
        }
        best = std::max(best, count);
    }
    return best;
}

bool NgramIndex::has_window_above(std::string_view text,
                                  std::uint64_t max_count) const {
    auto tokens = tokenize(text, mode_);
    if (tokens.size() < static_cast<std::size_t>(n_)) return false;
    auto hashes = token_hashes(tokens);
    for (std::size_t start = 0; start + n_ <= hashes.size(); ++start) {
        Digest128 fp = murmur3_128(hashes.data() + start,
                                   static_cast<std::size_t>(n_) * sizeof(std::uint64_t));
        auto it = std::lower_bound(fingerprints_.begin(), fingerprints_.end(), fp);
        if (it == fingerprints_.end() || !(*it == fp)) continue;
        std::uint64_t count = counts_[static_cast<std::size_t>(it - fingerprints_.begin())];
        if (count <= max_count) continue;
        if (max_count >= flag_threshold_) {
            // Fingerprint says above: confirm against the exact re-count so a
            // collision can never discard a clean record.
            auto exact = exact_counts_.find(
                window_key(tokens, start, static_cast<std::size_t>(n_)));
            if (exact != exact_counts_.end() && exact->second > max_count) return true;
        } else {
            return true;  // below the build threshold only fingerprints exist
        }
    }
    return false;
}

NgramIndexBuilder::NgramIndexBuilder(int n, TokenizerMode mode,
                                     std::uint64_t flag_threshold)
    : n_(n), mode_(mode), flag_threshold_(flag_threshold) {}

std::vector<Digest128> NgramIndexBuilder::fingerprints_of(std::string_view text) const {
    auto tokens = tokenize(text, mode_);
    return fingerprints(token_hashes(tokens), static_cast<std::size_t>(n_));
}

void NgramIndexBuilder::add_text(std::string_view text) {
    add_fingerprints(fingerprints_of(text));
}

void NgramIndexBuilder::add_fingerprints(const std::vector<Digest128>& fps) {
    raw_.insert(raw_.end(), fps.begin(), fps.end());
}

void NgramIndexBuilder::prepare_exact_pass() {
    std::sort(raw_.begin(), raw_.end());
    total_windows_ = raw_.size();
    sorted_fps_.clear();
    sorted_counts_.clear();
    for (std::size_t i = 0; i < raw_.size();) {
        std::size_t j = i;
        while (j < raw_.size() && raw_[j] == raw_[i]) ++j;
        sorted_fps_.push_back(raw_[i]);
        sorted_counts_.push_back(j - i);
        if (j - i > flag_threshold_) candidates_.insert(raw_[i]);
        i = j;
    }
    raw_.clear();
    raw_.shrink_to_fit();
    exact_phase_ = true;
}

void NgramIndexBuilder::add_exact_text(std::string_view text) {
    if (!exact_phase_ || candidates_.empty()) return;
    auto tokens = tokenize(text, mode_);
    if (tokens.size() < static_cast<std::size_t>(n_)) return;
    auto hashes = token_hashes(tokens);
    for (std::size_t start = 0; start + n_ <= hashes.size(); ++start) {
        Digest128 fp = murmur3_128(hashes.data() + start,
                                   static_cast<std::size_t>(n_) * sizeof(std::uint64_t));
        if (!candidates_.count(fp)) continue;
        ++exact_counts_[NgramIndex::window_key(tokens, start,
                                               static_cast<std::size_t>(n_))];
    }
}

NgramIndex NgramIndexBuilder::finish() {
    NgramIndex index;
    index.n_ = n_;
    index.mode_ = mode_;
    index.total_windows_ = total_windows_;
    index.fingerprints_ = std::move(sorted_fps_);
    index.counts_ = std::move(sorted_counts_);
    index.exact_counts_ = std::move(exact_counts_);
    index.flag_threshold_ = flag_threshold_;
    return index;
}

NgramIndex NgramIndexBuilder::build(const std::vector<QueryRecord>& records,
                                    const PipelineConfig& config) {
    NgramIndexBuilder builder(config.ngram_n, config.tokenizer,
                              config.ngram_max_count);
    for (const QueryRecord& r : records)
        for (const std::string& text : ngram_texts(r)) builder.add_text(text);
    builder.prepare_exact_pass();
    for (const QueryRecord& r : records)
        for (const std::string& text : ngram_texts(r)) builder.add_exact_text(text);
    return builder.finish();
}

NgramVerdict ngram_filter(const QueryRecord& record, const NgramIndex& index,
                          const PipelineConfig& config) {
    NgramVerdict verdict{retain_decision("qa"), {}};
    verdict.response_flagged.assign(record.responses.size(), false);

    bool any = false;
    bool all = !record.responses.empty();
    for (std::size_t i = 0; i < record.responses.size(); ++i) {
        ThinkAnswer ta = effective_think_answer(record.responses[i]);
        bool flagged = index.has_window_above(ta.think, config.ngram_max_count) ||
                       index.has_window_above(ta.answer, config.ngram_max_count);
        verdict.response_flagged[i] = flagged;
        any = any || flagged;
        all = all && flagged;
    }
    if (any && (!config.ngram_per_response_removal || all))
        verdict.decision = discard_decision("qa", "repetitive");
    return verdict;
}

std::string ppl_text(const QueryRecord& record, const PipelineConfig& config) {
    std::string text = query_text(record);
    for (const Response& r : record.responses) {
        ThinkAnswer ta = effective_think_answer(r);
        if (config.ppl_include_think && !ta.think.empty()) {
            text.push_back('\n');
            text += ta.think;
        }
        text.push_back('\n');
        text += ta.answer;
    }
    return text;
}

SelectionDecision ppl_filter(const QueryRecord& record, PplProvider& scorer,
                             const PipelineConfig& config) {
    double score = scorer.perplexity(record.id, ppl_text(record, config));
    if (score > config.ppl_threshold) return discard_decision("qa", "high_ppl");
    return retain_decision("qa");
}

SelectionDecision structural_validate(const QueryRecord& record) {
    // Turn count includes the response turn that training would append.
    if (record.category == Category::multiturn &&
        (record.turns.size() + 1) % 2 != 0)
        return discard_decision("qa", "odd_turns");
    for (const Response& r : record.responses) {
        ThinkAnswer ta = effective_think_answer(r);
        if (is_blank(ta.think)) return discard_decision("qa", "no_think");
        if (is_blank(ta.answer)) return discard_decision("qa", "no_answer");
    }
    return retain_decision("qa");
}

}  // namespace curator
