#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "curator/category.hpp"

namespace curator {

using json = nlohmann::json;

enum class TestCaseKind : std::uint8_t { stdin_stdout, assertion };

struct TestCase {
    TestCaseKind kind = TestCaseKind::stdin_stdout;
    std::string input;
    std::string expected_output;  // empty for assertion kind
    std::int64_t source_rank = 0;
};

struct Constraint {
    std::string kind;
    json params = json::object();
};

struct VerifyOutcome {
    double score = 0.0;
    bool pass = false;
    json detail = json::object();
};

// Builds an outcome whose pass flag is derived from the strict threshold rule.
// Throws std::invalid_argument if score lies outside the native scale.
VerifyOutcome make_outcome(double score, double threshold, ScoreScale scale,
                           json detail = json::object());

struct Response {
    std::string model;
    std::string think;
    std::string answer;
    std::optional<VerifyOutcome> outcome;
};

struct Turn {
    bool assistant = false;  // false = user
    std::string content;
};

struct AnswerTruth {
    std::string answer;
};

struct CodeTruth {
    std::vector<TestCase> test_cases;
    std::string language = "python";
};

struct ConstraintTruth {
    std::vector<Constraint> constraints;
};

using GroundTruth =
    std::variant<std::monostate, AnswerTruth, CodeTruth, ConstraintTruth>;

struct DifficultyStats {
    double max_score = 0.0;
    double mean = 0.0;
    std::optional<double> std_dev;  // sample std by default, see PipelineConfig
    std::optional<double> cv;
    double pass_rate = 0.0;
};

enum class Verdict : std::uint8_t { retain, discard, error };

struct SelectionDecision {
    Verdict verdict = Verdict::retain;
    std::string reason;
    std::string stage;
};

inline SelectionDecision retain_decision(std::string stage, std::string reason = "") {
    return {Verdict::retain, std::move(reason), std::move(stage)};
}
inline SelectionDecision discard_decision(std::string stage, std::string reason) {
    return {Verdict::discard, std::move(reason), std::move(stage)};
}
inline SelectionDecision error_decision(std::string stage, std::string reason) {
    return {Verdict::error, std::move(reason), std::move(stage)};
}

struct QueryRecord {
    std::string id;
    std::string source;
    Category category = Category::other;
    std::vector<Turn> turns;
    GroundTruth ground_truth;
    std::vector<Response> responses;
    std::optional<DifficultyStats> stats;
    std::optional<SelectionDecision> decision;
    std::optional<std::int64_t> stage2_choice;
};

// Concatenated user-turn text, newline separated. This is "the query text"
// everywhere a stage looks at the query as a whole.
std::string query_text(const QueryRecord& record);

struct EvalItem {
    std::string id;
    std::string query;
    std::vector<double> embedding;  // empty when not precomputed
};

struct EvalSet {
    std::vector<EvalItem> items;
};

}  // namespace curator
