#include "curator/verify.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>

#include "curator/text.hpp"

namespace curator {

ThinkAnswer split_think_answer(std::string_view raw) {
    constexpr std::string_view kOpen = "<think>";
    constexpr std::string_view kClose = "</think>";
    std::size_t open = raw.find(kOpen);
    if (open == std::string_view::npos) return {"", std::string(raw)};
    std::size_t close = raw.find(kClose, open + kOpen.size());
    if (close == std::string_view::npos) return {"", std::string(raw)};
    ThinkAnswer out;
    out.think = std::string(raw.substr(open + kOpen.size(), close - open - kOpen.size()));
    out.answer = std::string(raw.substr(close + kClose.size()));
    return out;
}

ThinkAnswer effective_think_answer(const Response& response) {
    if (response.think.empty() &&
        response.answer.find("<think>") != std::string::npos)
        return split_think_answer(response.answer);
    return {response.think, response.answer};
}

namespace {

// --- answer normalization ---------------------------------------------------

std::string strip_wrappers(std::string_view raw) {
    std::string s(trim(raw));
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        std::string_view v = trim(s);
        // $...$ / $$...$$ math delimiters
        while (v.size() >= 2 && v.front() == '$' && v.back() == '$') {
            v = trim(v.substr(1, v.size() - 2));
            changed = true;
        }
        // whole-string \boxed{...}
        constexpr std::string_view kBoxed = "\\boxed{";
        if (starts_with(v, kBoxed) && v.back() == '}') {
            std::string_view inner = v.substr(kBoxed.size(), v.size() - kBoxed.size() - 1);
            int depth = 0;
            bool balanced = true;
            for (char c : inner) {
                if (c == '{') ++depth;
                else if (c == '}' && --depth < 0) { balanced = false; break; }
            }
            if (balanced && depth == 0) {
                v = trim(inner);
                changed = true;
            }
        }
        if (changed) s = std::string(v);
    }
    // trailing sentence period (but never a decimal point)
    while (s.size() >= 2 && s.back() == '.' &&
           !std::isdigit(static_cast<unsigned char>(s[s.size() - 2])))
        s.pop_back();
    if (s == ".") s.clear();
    return collapse_whitespace(s);
}

struct Numeric {
    bool is_fraction = false;
    long long num = 0, den = 1;
    double value = 0.0;
};

std::optional<Numeric> parse_numeric(std::string_view raw) {
    std::string s(trim(raw));
    if (s.empty()) return std::nullopt;
    // thousands separators
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s)
        if (c != ',') cleaned.push_back(c);
    bool percent = false;
    if (!cleaned.empty() && cleaned.back() == '%') {
        percent = true;
        cleaned.pop_back();
    }
    if (cleaned.empty()) return std::nullopt;

    // exact p/q fractions
    std::size_t slash = cleaned.find('/');
    if (slash != std::string::npos && !percent) {
        std::string p = std::string(trim(std::string_view(cleaned).substr(0, slash)));
        std::string q = std::string(trim(std::string_view(cleaned).substr(slash + 1)));
        char* endp = nullptr;
        char* endq = nullptr;
        errno = 0;
        long long num = std::strtoll(p.c_str(), &endp, 10);
        long long den = std::strtoll(q.c_str(), &endq, 10);
        if (errno == 0 && endp && *endp == '\0' && endq && *endq == '\0' &&
            !p.empty() && !q.empty() && den != 0) {
            Numeric n;
            n.is_fraction = true;
            n.num = num;
            n.den = den;
            n.value = static_cast<double>(num) / static_cast<double>(den);
            return n;
        }
        return std::nullopt;
    }

    char* end = nullptr;
    errno = 0;
    double value = std::strtod(cleaned.c_str(), &end);
    if (errno != 0 || end == nullptr || *end != '\0' || end == cleaned.c_str())
        return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    Numeric n;
    n.value = percent ? value / 100.0 : value;
    return n;
}

// "12 km" -> "12": drop one trailing alphabetic unit token.
std::optional<std::string> strip_unit_token(std::string_view s) {
    auto tokens = whitespace_tokens(s);
    if (tokens.size() < 2) return std::nullopt;
    std::string_view last = tokens.back();
    for (char c : last)
        if (!std::isalpha(static_cast<unsigned char>(c)) && c != '^' && c != '%')
            return std::nullopt;
    std::string out;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += std::string(tokens[i]);
    }
    return out;
}

bool numerics_equal(const Numeric& a, const Numeric& b) {
    if (a.is_fraction && b.is_fraction) {
        // cross-multiplied exact compare
        return static_cast<__int128>(a.num) * b.den ==
               static_cast<__int128>(b.num) * a.den;
    }
    double tol = 1e-9 * std::max({1.0, std::fabs(a.value), std::fabs(b.value)});
    return std::fabs(a.value - b.value) <= tol;
}

}  // namespace

bool answers_equivalent(std::string_view candidate, std::string_view reference) {
    std::string a = strip_wrappers(candidate);
    std::string b = strip_wrappers(reference);
    if (!a.empty() && casefold_ascii(a) == casefold_ascii(b)) return true;

    auto na = parse_numeric(a);
    auto nb = parse_numeric(b);
    if (!na)
        if (auto stripped = strip_unit_token(a)) na = parse_numeric(*stripped);
    if (!nb)
        if (auto stripped = strip_unit_token(b)) nb = parse_numeric(*stripped);
    if (na && nb) return numerics_equal(*na, *nb);
    return false;
}

std::string extract_final_answer(std::string_view answer) {
    constexpr std::string_view kBoxed = "\\boxed{";
    std::size_t best = std::string_view::npos;
    std::size_t pos = 0;
    while ((pos = answer.find(kBoxed, pos)) != std::string_view::npos) {
        best = pos;
        pos += kBoxed.size();
    }
    if (best == std::string_view::npos) return std::string(answer);
    std::size_t start = best + kBoxed.size();
    int depth = 1;
    for (std::size_t i = start; i < answer.size(); ++i) {
        if (answer[i] == '{') ++depth;
        else if (answer[i] == '}' && --depth == 0)
            return std::string(answer.substr(start, i - start));
    }
    return std::string(answer);  // unbalanced: fall back to the whole text
}

std::optional<std::string> extract_last_code_block(std::string_view answer) {
    constexpr std::string_view kFence = "```";
    std::optional<std::string> last;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = answer.find(kFence, pos);
        if (open == std::string_view::npos) break;
        std::size_t body = answer.find('\n', open + kFence.size());
        if (body == std::string_view::npos) break;  // fence with no body
        ++body;
        std::size_t close = answer.find(kFence, body);
        if (close == std::string_view::npos) break;  // unclosed: ignore
        std::string_view content = answer.substr(body, close - body);
        if (!content.empty() && content.back() == '\n') content.remove_suffix(1);
        last = std::string(content);
        pos = close + kFence.size();
    }
    return last;
}

// --- constraint registry -----------------------------------------------------

namespace {

std::optional<std::int64_t> param_count(const Constraint& c) {
    auto it = c.params.find("count");
    if (it == c.params.end() || !it->is_number_integer()) return std::nullopt;
    return it->get<std::int64_t>();
}

std::optional<std::string> param_string(const Constraint& c, const char* key) {
    auto it = c.params.find(key);
    if (it == c.params.end() || !it->is_string()) return std::nullopt;
    return it->get<std::string>();
}

std::size_t bullet_lines(std::string_view answer) {
    std::size_t bullets = 0;
    std::size_t start = 0;
    while (start <= answer.size()) {
        std::size_t end = answer.find('\n', start);
        if (end == std::string_view::npos) end = answer.size();
        std::string_view line = trim(answer.substr(start, end - start));
        if (starts_with(line, "- ") || starts_with(line, "* ") ||
            line == "-" || line == "*")
            ++bullets;
        start = end + 1;
    }
    return bullets;
}

struct ConstraintDef {
    std::string_view kind;
    std::string (*validate)(const Constraint&);
    bool (*check)(const Constraint&, std::string_view);
};

std::string need_count(const Constraint& c) {
    auto n = param_count(c);
    if (!n || *n < 0) return "params.count must be a non-negative integer";
    return "";
}

std::string need_keyword(const Constraint& c) {
    auto k = param_string(c, "keyword");
    if (!k || k->empty()) return "params.keyword must be a nonempty string";
    return "";
}

const ConstraintDef kConstraints[] = {
    {"min_words", need_count,
     [](const Constraint& c, std::string_view answer) {
         return static_cast<std::int64_t>(whitespace_tokens(answer).size()) >=
                *param_count(c);
     }},
    {"max_words", need_count,
     [](const Constraint& c, std::string_view answer) {
         return static_cast<std::int64_t>(whitespace_tokens(answer).size()) <=
                *param_count(c);
     }},
    {"must_include_keyword", need_keyword,
     [](const Constraint& c, std::string_view answer) {
         return answer.find(*param_string(c, "keyword")) != std::string_view::npos;
     }},
    {"must_exclude_keyword", need_keyword,
     [](const Constraint& c, std::string_view answer) {
         return answer.find(*param_string(c, "keyword")) == std::string_view::npos;
     }},
    {"ends_with",
     [](const Constraint& c) -> std::string {
         auto t = param_string(c, "text");
         if (!t || t->empty()) return "params.text must be a nonempty string";
         return "";
     },
     [](const Constraint& c, std::string_view answer) {
         return ends_with(trim(answer), *param_string(c, "text"));
     }},
    {"bullet_count", need_count,
     [](const Constraint& c, std::string_view answer) {
         return static_cast<std::int64_t>(bullet_lines(answer)) == *param_count(c);
     }},
    {"all_lowercase",
     [](const Constraint&) -> std::string { return ""; },
     [](const Constraint&, std::string_view answer) {
         for (char ch : answer)
             if (std::isupper(static_cast<unsigned char>(ch))) return false;
         return true;
     }},
    {"json_object_output",
     [](const Constraint&) -> std::string { return ""; },
     [](const Constraint&, std::string_view answer) {
         json parsed = json::parse(trim(answer), nullptr, false);
         return !parsed.is_discarded() && parsed.is_object();
     }},
};

const ConstraintDef* find_constraint(std::string_view kind) {
    for (const ConstraintDef& def : kConstraints)
        if (def.kind == kind) return &def;
    return nullptr;
}

const AnswerTruth* answer_truth(const QueryRecord& record) {
    return std::get_if<AnswerTruth>(&record.ground_truth);
}

}  // namespace

bool constraint_registered(std::string_view kind) {
    return find_constraint(kind) != nullptr;
}

std::string validate_constraint(const Constraint& constraint) {
    const ConstraintDef* def = find_constraint(constraint.kind);
    if (!def) return "unregistered kind '" + constraint.kind + "'";
    return def->validate(constraint);
}

bool check_constraint(const Constraint& constraint, std::string_view answer) {
    const ConstraintDef* def = find_constraint(constraint.kind);
    if (!def) throw VerifyError("unknown_constraint");
    if (!def->validate(constraint).empty()) throw VerifyError("bad_constraint");
    return def->check(constraint, answer);
}

// --- verifiers ---------------------------------------------------------------

VerifyOutcome verify_math(const QueryRecord& record, std::int64_t response_index,
                          const Response& response, JudgeProvider* judge,
                          const PipelineConfig& config) {
    const AnswerTruth* truth = answer_truth(record);
    if (!truth) throw VerifyError("missing_ground_truth");

    ThinkAnswer ta = effective_think_answer(response);
    std::string extracted = extract_final_answer(ta.answer);

    double threshold = config.pass_threshold(Category::math);
    ScoreScale scale = native_scale(Category::math);
    if (answers_equivalent(extracted, truth->answer))
        return make_outcome(1.0, threshold, scale, {{"stage", "rule"}});

    if (!judge) throw VerifyError("judge_unconfigured");
    JudgeRequest req;
    req.record_id = record.id;
    req.response_index = response_index;
    req.question = query_text(record);
    req.reference = truth->answer;
    req.candidate = ta.answer;
    req.rubric = "binary_equivalence";
    double verdict = judge->score(req);
    return make_outcome(verdict > 0.5 ? 1.0 : 0.0, threshold, scale,
                        {{"stage", "judge"}});
}

VerifyOutcome verify_code(const QueryRecord& record, std::int64_t response_index,
                          const Response& response, CodeRunner& runner,
                          const PipelineConfig& config) {
    const CodeTruth* truth = std::get_if<CodeTruth>(&record.ground_truth);
    if (!truth || truth->test_cases.empty()) throw VerifyError("missing_ground_truth");

    double threshold = config.pass_threshold(Category::code);
    ScoreScale scale = native_scale(Category::code);

    ThinkAnswer ta = effective_think_answer(response);
    std::optional<std::string> code = extract_last_code_block(ta.answer);
    if (!code)
        return make_outcome(0.0, threshold, scale, {{"reason", "no_code"}});

    // First min(10, n) cases by source_rank, original order breaking ties.
    std::vector<std::size_t> order(truth->test_cases.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return truth->test_cases[a].source_rank < truth->test_cases[b].source_rank;
    });
    std::size_t selected = std::min<std::size_t>(10, order.size());
    std::vector<TestCase> cases;
    cases.reserve(selected);
    for (std::size_t i = 0; i < selected; ++i)
        cases.push_back(truth->test_cases[order[i]]);

    std::vector<CaseRun> runs =
        runner.run(record.id, response_index, *code, truth->language, cases);
    std::size_t passed = 0;
    for (const CaseRun& r : runs)
        if (r.passed) ++passed;
    double score = static_cast<double>(passed) / static_cast<double>(selected);
    return make_outcome(score, threshold, scale,
                        {{"passed", passed}, {"selected", selected}});
}

VerifyOutcome verify_science(const QueryRecord& record,
                             std::int64_t response_index,
                             const Response& response, JudgeProvider& judge,
                             const PipelineConfig& config) {
    const AnswerTruth* truth = answer_truth(record);
    if (!truth) throw VerifyError("missing_ground_truth");

    ThinkAnswer ta = effective_think_answer(response);
    JudgeRequest req;
    req.record_id = record.id;
    req.response_index = response_index;
    req.question = query_text(record);
    req.reference = truth->answer;
    req.candidate = ta.answer;
    req.rubric = "science_0_5";
    double score = judge.score(req);

    ScoreScale scale = native_scale(Category::science);
    json detail = json::object();
    if (score < scale.min || score > scale.max) {
        detail["provider_range"] = true;
        score = std::clamp(score, scale.min, scale.max);
    }
    return make_outcome(score, config.pass_threshold(Category::science), scale,
                        std::move(detail));
}

VerifyOutcome verify_if(const Response& response,
                        const std::vector<Constraint>& constraints,
                        const PipelineConfig& config) {
    if (constraints.empty()) throw VerifyError("no_constraints");
    for (const Constraint& c : constraints) {
        if (!constraint_registered(c.kind)) throw VerifyError("unknown_constraint");
        if (!validate_constraint(c).empty()) throw VerifyError("bad_constraint");
    }
    ThinkAnswer ta = effective_think_answer(response);
    std::size_t passed = 0;
    for (const Constraint& c : constraints)
        if (check_constraint(c, ta.answer)) ++passed;
    double score = static_cast<double>(passed) / static_cast<double>(constraints.size());
    return make_outcome(score, config.pass_threshold(Category::instruction_follow),
                        native_scale(Category::instruction_follow),
                        {{"passed", passed}, {"total", constraints.size()}});
}

VerifyOutcome verify_other(const QueryRecord& record,
                           std::int64_t response_index,
                           const Response& response, RewardProvider& reward,
                           const PipelineConfig& config) {
    ThinkAnswer ta = effective_think_answer(response);
    std::vector<Turn> turns = record.turns;
    turns.push_back({true, ta.answer});
    RewardScores s = reward.score(record.id, response_index, turns);

    double score = (s.coherence + s.correctness + s.helpfulness) / 12.0;
    ScoreScale scale = native_scale(record.category);
    json detail = {{"coherence", s.coherence},
                   {"correctness", s.correctness},
                   {"helpfulness", s.helpfulness}};
    if (score < scale.min || score > scale.max) {
        detail["provider_range"] = true;
        score = std::clamp(score, scale.min, scale.max);
    }
    return make_outcome(score, config.pass_threshold(record.category), scale,
                        std::move(detail));
}

void verify_record(QueryRecord& record, const VerifierSet& verifiers,
                   const PipelineConfig& config) {
    for (std::size_t i = 0; i < record.responses.size(); ++i) {
        Response& r = record.responses[i];
        auto index = static_cast<std::int64_t>(i);
        switch (record.category) {
            case Category::math:
                r.outcome = verify_math(record, index, r, verifiers.judge, config);
                break;
            case Category::code:
                if (!verifiers.runner) throw VerifyError("runner_unconfigured");
                r.outcome = verify_code(record, index, r, *verifiers.runner, config);
                break;
            case Category::science:
                if (!verifiers.judge) throw VerifyError("judge_unconfigured");
                r.outcome = verify_science(record, index, r, *verifiers.judge, config);
                break;
            case Category::instruction_follow: {
                const auto* truth = std::get_if<ConstraintTruth>(&record.ground_truth);
                if (!truth) throw VerifyError("missing_ground_truth");
                r.outcome = verify_if(r, truth->constraints, config);
                break;
            }
            case Category::multiturn:
            case Category::other:
                if (!verifiers.reward) throw VerifyError("reward_unconfigured");
                r.outcome = verify_other(record, index, r, *verifiers.reward, config);
                break;
        }
    }
}

}  // namespace curator
