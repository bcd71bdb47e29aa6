#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curator/config.hpp"
#include "curator/rng.hpp"
#include "curator/types.hpp"

namespace curator {

struct GradeError : std::runtime_error {
    std::string reason;
    explicit GradeError(std::string r)
        : std::runtime_error(r), reason(std::move(r)) {}
};

// Fraction of scores strictly above the threshold. Throws on empty input.
double pass_rate(const std::vector<double>& scores, double threshold);

// max/mean/std/cv over >=2 scores. Throws GradeError("zero_mean") when the
// mean is zero. pass_rate is filled by the caller.
DifficultyStats difficulty_stats(const std::vector<double>& scores,
                                 StdMode mode = StdMode::sample);

// Stats for grading one record: tolerates n == 1 (std/cv absent) and a zero
// mean (cv absent; such records die at the max-score gate downstream).
DifficultyStats grade_record(const QueryRecord& record,
                             const PipelineConfig& config);

struct Stage1Result {
    SelectionDecision decision;
    // Indices of responses kept when the decision retains the record.
    std::vector<std::size_t> retained_responses;
};

// Max-score gate, CV branch, easy-query lottery. The lottery draw comes from
// the (seed, id, "stage1") derived stream so outcomes are order-independent.
Stage1Result stage1_select(const QueryRecord& record,
                           const PipelineConfig& config);

struct Stage2Pick {
    std::size_t record_index = 0;  // into the input span
    std::int64_t chosen_response = 0;
};

// Top-K by cv descending (ties by ascending id) among records with
// cv > CV_t and normalized max score above the stage-2 threshold; one
// qualifying response sampled per record from the (seed, id, "stage2")
// stream. Output order is the ranking order.
std::vector<Stage2Pick> stage2_select(const std::vector<QueryRecord>& records,
                                      const PipelineConfig& config,
                                      std::int64_t top_k, int workers = 1);

// True when the record qualifies for stage 2.
bool stage2_eligible(const QueryRecord& record, const PipelineConfig& config);

// Uniform pick among responses whose normalized score clears the stage-2
// threshold; -1 when none do.
std::int64_t stage2_sample_response(const QueryRecord& record,
                                    const PipelineConfig& config);

}  // namespace curator
