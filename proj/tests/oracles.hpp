#pragma once

// Independent straight-line reimplementations of the selection and counting
// logic, kept deliberately naive. Tests compare the production code against
// these; any change that alters a decision has to break a test here first.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "curator/config.hpp"
#include "curator/rng.hpp"
#include "curator/types.hpp"

namespace oracle {

using curator::Category;
using curator::PipelineConfig;
using curator::QueryRecord;

struct Stage1Outcome {
    enum Kind { discard_low_max, retain_high_cv, retain_easy_kept, discard_easy } kind;
    std::vector<std::size_t> retained;  // for retain_* kinds
};

// Algorithm 1, written as one literal walk over the rules.
inline Stage1Outcome stage1(const QueryRecord& record,
                            const PipelineConfig& config) {
    std::vector<double> scores;
    for (const auto& r : record.responses) scores.push_back(r.outcome->score);
    double threshold = config.pass_threshold(record.category);

    double max_score = scores[0];
    for (double s : scores) max_score = std::max(max_score, s);
    if (max_score < threshold) return {Stage1Outcome::discard_low_max, {}};

    double mean = 0;
    for (double s : scores) mean += s;
    mean /= static_cast<double>(scores.size());

    std::optional<double> cv;
    if (record.stats && record.stats->cv) {
        cv = record.stats->cv;  // precomputed stats win, as in production
    } else if (scores.size() >= 2 && mean != 0.0) {
        double ss = 0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        double divisor = config.std_mode == curator::StdMode::sample
                             ? static_cast<double>(scores.size() - 1)
                             : static_cast<double>(scores.size());
        cv = std::sqrt(ss / divisor) / mean;
    }

    if (cv && *cv > config.cv_threshold(record.category)) {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < scores.size(); ++i)
            if (scores[i] > threshold) kept.push_back(i);
        return {Stage1Outcome::retain_high_cv, kept};
    }
    if (curator::is_conversational(record.category)) {
        curator::SplitMix64 rng =
            curator::record_rng(config.rng_seed, record.id, "stage1");
        if (rng.uniform01() < config.easy_keep_probability) {
            std::vector<std::size_t> all(scores.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            return {Stage1Outcome::retain_easy_kept, all};
        }
    }
    return {Stage1Outcome::discard_easy, {}};
}

// Naive exact n-gram window counts over whitespace tokens, '\x1f'-joined.
inline std::map<std::string, std::uint64_t> ngram_counts(
    const std::vector<std::string>& texts, int n) {
    std::map<std::string, std::uint64_t> counts;
    for (const std::string& text : texts) {
        std::vector<std::string> tokens;
        std::string cur;
        for (char c : text) {
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
                c == '\v') {
                if (!cur.empty()) tokens.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) tokens.push_back(cur);
        if (tokens.size() < static_cast<std::size_t>(n)) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string key = tokens[i];
            for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) {
                key.push_back('\x1f');
                key += tokens[i + j];
            }
            ++counts[key];
        }
    }
    return counts;
}

inline std::uint64_t max_window_count(
    const std::map<std::string, std::uint64_t>& counts,
    const std::string& text, int n) {
    auto per_text = ngram_counts({text}, n);
    std::uint64_t best = 0;
    for (const auto& [key, _] : per_text) {
        auto it = counts.find(key);
        if (it != counts.end()) best = std::max(best, it->second);
    }
    return best;
}

// Brute-force stage 2: filter, sort, cut, sample.
struct Stage2Choice {
    std::string id;
    std::int64_t response = -1;
};

inline std::vector<Stage2Choice> stage2(const std::vector<QueryRecord>& records,
                                        const PipelineConfig& config,
                                        std::int64_t top_k) {
    struct Row {
        double cv;
        std::string id;
        const QueryRecord* record;
    };
    std::vector<Row> rows;
    for (const auto& record : records) {
        if (!record.stats || !record.stats->cv) continue;
        double scale = curator::native_scale(record.category).max;
        if (!(*record.stats->cv > config.cv_threshold(record.category))) continue;
        if (!(record.stats->max_score / scale > config.stage2_threshold_normalized))
            continue;
        rows.push_back({*record.stats->cv, record.id, &record});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.cv != b.cv) return a.cv > b.cv;
        return a.id < b.id;
    });
    std::size_t want = top_k < 0 ? rows.size()
                                 : std::min<std::size_t>(
                                       static_cast<std::size_t>(top_k), rows.size());
    rows.resize(want);

    std::vector<Stage2Choice> picks;
    for (const Row& row : rows) {
        double scale = curator::native_scale(row.record->category).max;
        std::vector<std::int64_t> passing;
        for (std::size_t i = 0; i < row.record->responses.size(); ++i) {
            const auto& outcome = row.record->responses[i].outcome;
            if (outcome &&
                outcome->score / scale > config.stage2_threshold_normalized)
                passing.push_back(static_cast<std::int64_t>(i));
        }
        Stage2Choice choice;
        choice.id = row.id;
        if (!passing.empty()) {
            curator::SplitMix64 rng =
                curator::record_rng(config.rng_seed, row.id, "stage2");
            choice.response = passing[rng.uniform_below(passing.size())];
        }
        picks.push_back(choice);
    }
    return picks;
}

// Exact rational verification formulas, numerator/denominator form.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Rational eq_code(const std::vector<bool>& case_results) {
    std::int64_t passed = 0;
    for (bool b : case_results) passed += b ? 1 : 0;
    return {passed, static_cast<std::int64_t>(case_results.size())};
}

inline Rational eq_if(const std::vector<bool>& constraint_results) {
    std::int64_t passed = 0;
    for (bool b : constraint_results) passed += b ? 1 : 0;
    return {passed, static_cast<std::int64_t>(constraint_results.size())};
}

inline Rational eq_other(int coherence, int correctness, int helpfulness) {
    return {coherence + correctness + helpfulness, 12};
}

}  // namespace oracle
