#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "curator/config.hpp"
#include "curator/hash.hpp"
#include "curator/providers.hpp"
#include "curator/types.hpp"

namespace curator {

// The texts the n-gram scan covers for one record: think and answer of every
// response, as separate texts.
std::vector<std::string> ngram_texts(const QueryRecord& record);

// Frozen corpus-wide window counts. Windows are fingerprinted with a 128-bit
// hash; any window whose fingerprint count crosses the removal threshold is
// re-counted exactly, so a collision can never cause a false removal.
class NgramIndex {
  public:
    std::uint64_t window_count(std::string_view window_key) const;
    // Highest corpus frequency over the text's windows (0 if shorter than n).
    std::uint64_t max_window_count(std::string_view text) const;
    bool has_window_above(std::string_view text, std::uint64_t max_count) const;

    int n() const { return n_; }
    TokenizerMode mode() const { return mode_; }
    std::uint64_t total_windows() const { return total_windows_; }
    std::uint64_t distinct_windows() const { return fingerprints_.size(); }

    static std::string window_key(const std::vector<std::string_view>& tokens,
                                  std::size_t start, std::size_t n);

  private:
    friend class NgramIndexBuilder;
    int n_ = 20;
    TokenizerMode mode_ = TokenizerMode::whitespace;
    std::uint64_t total_windows_ = 0;
    // Sorted, parallel arrays.
    std::vector<Digest128> fingerprints_;
    std::vector<std::uint64_t> counts_;
    // Exact counts for windows whose fingerprint count exceeded the removal
    // threshold during the build.
    std::unordered_map<std::string, std::uint64_t> exact_counts_;
    std::uint64_t flag_threshold_ = 0;
};

// Two-pass build: feed every text to add_text, call prepare_exact_pass, feed
// every text again to add_exact_text, then finish. The two passes let the
// exact re-count only keep the (few) high-frequency windows.
class NgramIndexBuilder {
  public:
    NgramIndexBuilder(int n, TokenizerMode mode, std::uint64_t flag_threshold);

    void add_text(std::string_view text);
    void add_fingerprints(const std::vector<Digest128>& fps);
    // Fingerprints of one text's windows, for parallel callers.
    std::vector<Digest128> fingerprints_of(std::string_view text) const;

    void prepare_exact_pass();
    void add_exact_text(std::string_view text);

    NgramIndex finish();

    // Convenience serial build over whole records.
    static NgramIndex build(const std::vector<QueryRecord>& records,
                            const PipelineConfig& config);

  private:
    int n_;
    TokenizerMode mode_;
    std::uint64_t flag_threshold_;
    bool exact_phase_ = false;
    std::vector<Digest128> raw_;
    std::vector<Digest128> sorted_fps_;
    std::vector<std::uint64_t> sorted_counts_;
    std::uint64_t total_windows_ = 0;
    std::unordered_set<Digest128, Digest128Hash> candidates_;
    std::unordered_map<std::string, std::uint64_t> exact_counts_;
};

// Discard `repetitive` iff some window of some response text exceeds the
// configured count, exact-verified. Per-response flags are returned for the
// per-response removal mode.
struct NgramVerdict {
    SelectionDecision decision;
    std::vector<bool> response_flagged;
};

NgramVerdict ngram_filter(const QueryRecord& record, const NgramIndex& index,
                          const PipelineConfig& config);

// Text submitted to the perplexity scorer: query text, then each response's
// answer (optionally preceded by its think content), newline separated.
std::string ppl_text(const QueryRecord& record, const PipelineConfig& config);

SelectionDecision ppl_filter(const QueryRecord& record, PplProvider& scorer,
                             const PipelineConfig& config);

// Even-turn, think-content and answer-content checks.
SelectionDecision structural_validate(const QueryRecord& record);

}  // namespace curator
