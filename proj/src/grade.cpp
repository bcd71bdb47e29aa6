#include "curator/grade.hpp"

#include <algorithm>
#include <cmath>

#include "curator/parallel.hpp"

namespace curator {

double pass_rate(const std::vector<double>& scores, double threshold) {
    if (scores.empty()) throw GradeError("empty_scores");
    std::size_t passed = 0;
    for (double s : scores)
        if (s > threshold) ++passed;
    return static_cast<double>(passed) / static_cast<double>(scores.size());
}

DifficultyStats difficulty_stats(const std::vector<double>& scores, StdMode mode) {
    if (scores.size() < 2) throw GradeError("too_few_scores");
    DifficultyStats st;
    st.max_score = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    st.mean = sum / static_cast<double>(scores.size());
    if (st.mean == 0.0) throw GradeError("zero_mean");

    double ss = 0.0;
    for (double s : scores) ss += (s - st.mean) * (s - st.mean);
    double divisor = mode == StdMode::sample
                         ? static_cast<double>(scores.size() - 1)
                         : static_cast<double>(scores.size());
    st.std_dev = std::sqrt(ss / divisor);
    st.cv = *st.std_dev / st.mean;
    return st;
}

namespace {

std::vector<double> verified_scores(const QueryRecord& record) {
    std::vector<double> scores;
    scores.reserve(record.responses.size());
    for (const Response& r : record.responses) {
        if (!r.outcome) throw GradeError("not_verified");
        scores.push_back(r.outcome->score);
    }
    return scores;
}

}  // namespace

DifficultyStats grade_record(const QueryRecord& record,
                             const PipelineConfig& config) {
    std::vector<double> scores = verified_scores(record);
    if (scores.empty()) throw GradeError("no_responses");

    double threshold = config.pass_threshold(record.category);
    DifficultyStats st;
    st.pass_rate = pass_rate(scores, threshold);
    st.max_score = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    st.mean = sum / static_cast<double>(scores.size());
    if (scores.size() >= 2) {
        double ss = 0.0;
        for (double s : scores) ss += (s - st.mean) * (s - st.mean);
        double divisor = config.std_mode == StdMode::sample
                             ? static_cast<double>(scores.size() - 1)
                             : static_cast<double>(scores.size());
        st.std_dev = std::sqrt(ss / divisor);
        if (st.mean > 0.0) st.cv = *st.std_dev / st.mean;
    }
    return st;
}

Stage1Result stage1_select(const QueryRecord& record,
                           const PipelineConfig& config) {
    for (const Response& r : record.responses)
        if (!r.outcome) return {error_decision("stage1", "not_verified"), {}};
    if (record.responses.size() < 2)
        return {error_decision("stage1", "too_few_responses"), {}};

    DifficultyStats stats = record.stats ? *record.stats : grade_record(record, config);
    double threshold = config.pass_threshold(record.category);
    double cv_t = config.cv_threshold(record.category);

    if (stats.max_score < threshold)
        return {discard_decision("stage1", "low_max_score"), {}};
    if (!stats.cv) return {error_decision("stage1", "no_cv"), {}};

    if (*stats.cv > cv_t) {
        // High-variance query: keep only the responses that actually pass.
        Stage1Result result{retain_decision("stage1", "high_cv"), {}};
        for (std::size_t i = 0; i < record.responses.size(); ++i)
            if (record.responses[i].outcome->score > threshold)
                result.retained_responses.push_back(i);
        return result;
    }

    if (is_conversational(record.category)) {
        SplitMix64 rng = record_rng(config.rng_seed, record.id, "stage1");
        if (rng.uniform01() < config.easy_keep_probability) {
            Stage1Result result{retain_decision("stage1", "easy_kept"), {}};
            for (std::size_t i = 0; i < record.responses.size(); ++i)
                result.retained_responses.push_back(i);
            return result;
        }
        return {discard_decision("stage1", "easy"), {}};
    }
    return {discard_decision("stage1", "easy"), {}};
}

bool stage2_eligible(const QueryRecord& record, const PipelineConfig& config) {
    if (!record.stats || !record.stats->cv) return false;
    double scale_max = native_scale(record.category).max;
    return *record.stats->cv > config.cv_threshold(record.category) &&
           record.stats->max_score / scale_max > config.stage2_threshold_normalized;
}

std::int64_t stage2_sample_response(const QueryRecord& record,
                                    const PipelineConfig& config) {
    double scale_max = native_scale(record.category).max;
    std::vector<std::int64_t> passing;
    for (std::size_t i = 0; i < record.responses.size(); ++i) {
        const auto& outcome = record.responses[i].outcome;
        if (outcome && outcome->score / scale_max > config.stage2_threshold_normalized)
            passing.push_back(static_cast<std::int64_t>(i));
    }
    if (passing.empty()) return -1;
    SplitMix64 rng = record_rng(config.rng_seed, record.id, "stage2");
    return passing[rng.uniform_below(passing.size())];
}

std::vector<Stage2Pick> stage2_select(const std::vector<QueryRecord>& records,
                                      const PipelineConfig& config,
                                      std::int64_t top_k, int workers) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (stage2_eligible(records[i], config)) eligible.push_back(i);

    auto better = [&](std::size_t a, std::size_t b) {
        double cva = *records[a].stats->cv;
        double cvb = *records[b].stats->cv;
        if (cva != cvb) return cva > cvb;
        return records[a].id < records[b].id;
    };

    std::size_t want = top_k < 0 ? eligible.size()
                                 : std::min<std::size_t>(
                                       static_cast<std::size_t>(top_k), eligible.size());

    // Partial selection: each worker ranks a chunk, then the merged candidate
    // pool is re-ranked. Result is identical to sorting everything.
    int lanes = resolve_workers(workers);
    if (lanes > 1 && eligible.size() > 2 * want && want > 0) {
        std::size_t chunk = (eligible.size() + lanes - 1) / static_cast<std::size_t>(lanes);
        std::vector<std::size_t> pool;
        for (std::size_t start = 0; start < eligible.size(); start += chunk) {
            std::size_t end = std::min(start + chunk, eligible.size());
            std::size_t keep = std::min(want, end - start);
            std::partial_sort(eligible.begin() + static_cast<std::ptrdiff_t>(start),
                              eligible.begin() + static_cast<std::ptrdiff_t>(start + keep),
                              eligible.begin() + static_cast<std::ptrdiff_t>(end), better);
            pool.insert(pool.end(), eligible.begin() + static_cast<std::ptrdiff_t>(start),
                        eligible.begin() + static_cast<std::ptrdiff_t>(start + keep));
        }
        eligible = std::move(pool);
    }
    std::sort(eligible.begin(), eligible.end(), better);
    eligible.resize(want);

    std::vector<Stage2Pick> picks(eligible.size());
    parallel_for(eligible.size(), workers, [&](std::size_t i) {
        std::int64_t chosen = stage2_sample_response(records[eligible[i]], config);
        if (chosen < 0) throw GradeError("no_passing_response");
        picks[i] = {eligible[i], chosen};
    });
    return picks;
}

}  // namespace curator
