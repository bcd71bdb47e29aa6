#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curator/coderunner.hpp"
#include "curator/config.hpp"
#include "curator/providers.hpp"
#include "curator/types.hpp"

namespace curator {

struct ThinkAnswer {
    std::string think;
    std::string answer;
};

// Splits on the first <think>...</think> block; absent or unclosed tags mean
// no think content and the full text as answer.
ThinkAnswer split_think_answer(std::string_view raw);

// A response whose think field is empty but whose answer still carries
// <think> tags is split on the fly; otherwise fields are taken as stored.
ThinkAnswer effective_think_answer(const Response& response);

// Rule-based answer equivalence: normalization (boxed/dollar/period/unit
// stripping) then casefolded string match or numeric match, fractions exact,
// decimals within 1e-9 relative tolerance.
bool answers_equivalent(std::string_view candidate, std::string_view reference);

// Content of the last \boxed{...} in the text, or the whole text.
std::string extract_final_answer(std::string_view answer);

// Last fenced code block, or nullopt when there is none.
std::optional<std::string> extract_last_code_block(std::string_view answer);

VerifyOutcome verify_math(const QueryRecord& record, std::int64_t response_index,
                          const Response& response, JudgeProvider* judge,
                          const PipelineConfig& config);

VerifyOutcome verify_code(const QueryRecord& record, std::int64_t response_index,
                          const Response& response, CodeRunner& runner,
                          const PipelineConfig& config);

VerifyOutcome verify_science(const QueryRecord& record,
                             std::int64_t response_index,
                             const Response& response, JudgeProvider& judge,
                             const PipelineConfig& config);

// Throws VerifyError with reason "unknown_constraint" on unregistered kinds.
VerifyOutcome verify_if(const Response& response,
                        const std::vector<Constraint>& constraints,
                        const PipelineConfig& config);

VerifyOutcome verify_other(const QueryRecord& record,
                           std::int64_t response_index,
                           const Response& response, RewardProvider& reward,
                           const PipelineConfig& config);

struct VerifyError : std::runtime_error {
    std::string reason;
    explicit VerifyError(std::string r)
        : std::runtime_error(r), reason(std::move(r)) {}
};

// Constraint checker registry (ifeval-style built-ins).
bool constraint_registered(std::string_view kind);
// Empty string when valid, else the problem description.
std::string validate_constraint(const Constraint& constraint);
bool check_constraint(const Constraint& constraint, std::string_view answer);

struct VerifierSet {
    JudgeProvider* judge = nullptr;
    RewardProvider* reward = nullptr;
    CodeRunner* runner = nullptr;
};

// Dispatches on category and fills outcome for every response in place.
// Throws VerifyError when a needed provider is missing or a constraint is
// unknown, ProviderError on exhausted retries.
void verify_record(QueryRecord& record, const VerifierSet& verifiers,
                   const PipelineConfig& config);

}  // namespace curator
