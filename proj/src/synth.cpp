#include "curator/synth.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <stdexcept>

#include "curator/hash.hpp"
#include "curator/ingest.hpp"
#include "curator/rng.hpp"

namespace curator {

namespace {

namespace fs = std::filesystem;

constexpr std::size_t kVectorDim = 16;

// 21 whitespace tokens: two 20-token windows per occurrence, shared verbatim
// by every boilerplate record so the window count equals the record count.
constexpr const char* kBoilerplate =
    "the quick brown fox jumps over the lazy dog again and again while the "
    "clock ticks softly past midnight toward dawn";

enum class Fault : std::uint8_t {
    none,
    duplicate,
    hygiene,
    contaminated_exact,
    contaminated_semantic,
    high_ppl,
    boilerplate,
};

struct RecordPlan {
    std::string id;
    Category category = Category::other;
    std::size_t correct = 0;  // responses [0, correct) are the correct ones
    Fault fault = Fault::none;
    std::size_t partner = 0;  // duplicate target index / eval item index
    int hygiene_kind = 0;
};

std::string record_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "synth-%06zu", index);
    return buf;
}

std::string eval_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "eval-%04zu", index);
    return buf;
}

std::string eval_query(std::size_t index) {
    return "benchmark " + std::to_string(index) +
           ": name the capital of region " + std::to_string(index) + ".";
}

// One-hot vectors keep every cosine either exactly 0 or exactly 1: eval items
// live on dims [0,8), clean corpus queries on dims [8,16), and a semantically
// contaminated record copies its eval item's vector.
std::vector<double> eval_vector(std::size_t index) {
    std::vector<double> v(kVectorDim, 0.0);
    v[index % 8] = 1.0;
    return v;
}

std::vector<double> corpus_vector(const RecordPlan& plan) {
    if (plan.fault == Fault::contaminated_semantic) return eval_vector(plan.partner);
    std::vector<double> v(kVectorDim, 0.0);
    v[8 + fnv1a64(plan.id) % 8] = 1.0;
    return v;
}

std::vector<RecordPlan> compute_plan(const SynthSpec& spec) {
    if (spec.records == 0) throw std::invalid_argument("synth: records == 0");
    if (spec.responses_per_record == 0)
        throw std::invalid_argument("synth: responses_per_record == 0");

    std::vector<RecordPlan> plan(spec.records);
    for (std::size_t r = 0; r < spec.records; ++r) {
        plan[r].id = record_id(r);
        plan[r].category = kAllCategories[r % kCategoryCount];
        plan[r].correct = r % (spec.responses_per_record + 1);
    }

    auto count_of = [&](double fraction) {
        return static_cast<std::size_t>(fraction * static_cast<double>(spec.records) + 0.5);
    };
    std::size_t n_dup = count_of(spec.duplicate_fraction);
    std::size_t n_hyg = count_of(spec.hygiene_bad_fraction);
    std::size_t n_cont = count_of(spec.contaminated_fraction);
    std::size_t n_ppl = count_of(spec.high_ppl_fraction);
    std::size_t n_boiler = spec.boilerplate_records;
    if (n_cont > 0 && spec.eval_items == 0)
        throw std::invalid_argument("synth: contamination needs eval items");
    if (1 + n_dup + n_hyg + n_cont + n_ppl + n_boiler > spec.records)
        throw std::invalid_argument("synth: fault fractions exceed corpus size");

    // Record 0 stays clean so duplicates always have a surviving target.
    std::vector<std::size_t> order;
    order.reserve(spec.records - 1);
    for (std::size_t r = 1; r < spec.records; ++r) order.push_back(r);
    SplitMix64 rng(spec.seed ^ fnv1a64("synth-faults"));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_below(i)]);

    std::size_t next = 0;
    auto take = [&](std::size_t count, const std::function<void(std::size_t, std::size_t)>& mark) {
        for (std::size_t k = 0; k < count; ++k) mark(order[next++], k);
    };
    take(n_dup, [&](std::size_t r, std::size_t) { plan[r].fault = Fault::duplicate; });
    take(n_hyg, [&](std::size_t r, std::size_t k) {
        plan[r].fault = Fault::hygiene;
        plan[r].hygiene_kind = static_cast<int>(k % 3);
    });
    take(n_cont, [&](std::size_t r, std::size_t k) {
        plan[r].fault = k % 2 == 0 ? Fault::contaminated_exact
                                   : Fault::contaminated_semantic;
        plan[r].partner = k % spec.eval_items;
    });
    take(n_ppl, [&](std::size_t r, std::size_t) { plan[r].fault = Fault::high_ppl; });
    take(n_boiler, [&](std::size_t r, std::size_t) { plan[r].fault = Fault::boilerplate; });

    // Duplicate targets: nearest earlier clean record (record 0 backstops).
    for (std::size_t r = 0; r < spec.records; ++r) {
        if (plan[r].fault != Fault::duplicate) continue;
        std::size_t t = r;
        while (t > 0) {
            --t;
            if (plan[t].fault == Fault::none) break;
        }
        plan[r].partner = t;
    }
    return plan;
}

std::vector<Turn> plan_turns(const RecordPlan& plan, std::size_t index) {
    std::string tag = "task " + std::to_string(index);
    switch (plan.category) {
        case Category::math: {
            std::size_t a = (index * 3 + 1) % 50, b = (index * 5 + 2) % 50;
            return {{false, tag + ": compute the sum of " + std::to_string(a) +
                                " and " + std::to_string(b) + "."}};
        }
        case Category::code:
            return {{false, tag + ": write a python function add(a, b) "
                                  "returning the sum of its arguments."}};
        case Category::science:
            return {{false, tag + ": explain why the sky appears blue at noon."}};
        case Category::instruction_follow:
            return {{false, tag + ": list six greek letters in lowercase and "
                                  "include alpha."}};
        case Category::multiturn:
            return {{false, tag + ": we are planning a picnic. any ideas?"},
                    {true, "sure: a park visit with sandwiches works well."},
                    {false, "make the menu vegetarian please."}};
        case Category::other:
            return {{false, tag + ": describe a quiet morning in one paragraph."}};
    }
    return {{false, tag}};
}

GroundTruth plan_truth(const RecordPlan& plan, std::size_t index) {
    switch (plan.category) {
        case Category::math: {
            std::size_t a = (index * 3 + 1) % 50, b = (index * 5 + 2) % 50;
            return AnswerTruth{std::to_string(a + b)};
        }
        case Category::code: {
            CodeTruth truth;
            truth.language = "python";
            truth.test_cases = {
                {TestCaseKind::assertion, "assert add(1, 2) == 3", "", 0},
                {TestCaseKind::assertion, "assert add(-1, 1) == 0", "", 1},
                {TestCaseKind::assertion, "assert add(10, 5) == 15", "", 2},
            };
            return truth;
        }
        case Category::science:
            return AnswerTruth{"rayleigh scattering attenuates shorter "
                               "wavelengths more strongly"};
        case Category::instruction_follow: {
            ConstraintTruth truth;
            truth.constraints = {
                {"min_words", json{{"count", 5}}},
                {"must_include_keyword", json{{"keyword", "alpha"}}},
                {"all_lowercase", json::object()},
            };
            return truth;
        }
        case Category::multiturn:
        case Category::other:
            return AnswerTruth{"a helpful, grounded reply"};
    }
    return std::monostate{};
}

std::string plan_answer(const RecordPlan& plan, std::size_t index,
                        std::size_t response, bool correct) {
    std::string j = std::to_string(response);
    switch (plan.category) {
        case Category::math: {
            std::size_t a = (index * 3 + 1) % 50, b = (index * 5 + 2) % 50;
            std::size_t value = correct ? a + b : a + b + 1 + response;
            return "after checking the arithmetic the result is \\boxed{" +
                   std::to_string(value) + "}.";
        }
        case Category::code:
            return correct ? "here is the function:\n```python\ndef add(a, b):\n"
                             "    return a + b\n```"
                           : "here is the function:\n```python\ndef add(a, b):\n"
                             "    return a - b\n```";
        case Category::science:
            return correct ? "rayleigh scattering removes shorter wavelengths "
                             "first, so the sky looks blue (attempt " + j + ")."
                           : "reflection from the ocean colors the sky blue "
                             "(attempt " + j + ").";
        case Category::instruction_follow:
            return correct ? "alpha beta gamma delta epsilon zeta"
                           : "Beta and Gamma only.";
        case Category::multiturn:
            return correct ? "use grilled vegetables and hummus wraps (option " +
                                 j + ")."
                           : "just bring ham sandwiches (option " + j + ").";
        case Category::other:
            return correct ? "a quiet morning unfolds with soft light and slow "
                             "coffee (take " + j + ")."
                           : "mornings exist (take " + j + ").";
    }
    return "response " + j;
}

// Duplicate targets are always clean records, so their turns can be
// regenerated from the plan without materializing the earlier record.
QueryRecord build_record(const std::vector<RecordPlan>& plan, std::size_t r,
                         const SynthSpec& spec) {
    const RecordPlan& p = plan[r];
    QueryRecord record;
    record.id = p.id;
    record.source = "synth";
    record.category = p.category;
    record.turns = plan_turns(p, r);
    record.ground_truth = plan_truth(p, r);

    switch (p.fault) {
        case Fault::duplicate:
            record.turns = plan_turns(plan[p.partner], p.partner);
            break;
        case Fault::hygiene:
            if (p.hygiene_kind == 0)
                record.turns = {{false, "see https://example.com/task/" +
                                            std::to_string(r) + " for details"}};
            else if (p.hygiene_kind == 1)
                record.turns = {{false, "task " + std::to_string(r) +
                                            ": finish the snippet ```"}};
            else
                // 18 Greek letters vs at most 12 ASCII code points keeps the
                // unicode ratio above 0.5 for any index width.
                record.turns = {{false, "task " + std::to_string(r) +
                                            " \xce\xb1\xce\xb2\xce\xb3\xce\xb4"
                                            "\xce\xb5\xce\xb6\xce\xb7\xce\xb8"
                                            "\xce\xb9\xce\xba\xce\xbb\xce\xbc"
                                            "\xce\xbd\xce\xbe\xce\xbf\xcf\x80"
                                            "\xcf\x81\xcf\x83"}};
            break;
        case Fault::contaminated_exact:
            record.turns = {{false, eval_query(p.partner)}};
            break;
        case Fault::contaminated_semantic:
            record.turns = {{false, eval_query(p.partner) + " rephrased."}};
            break;
        default:
            break;
    }

    record.responses.resize(spec.responses_per_record);
    for (std::size_t j = 0; j < spec.responses_per_record; ++j) {
        Response& resp = record.responses[j];
        resp.model = "synth-model-" + std::string(1, static_cast<char>('a' + j % 4));
        resp.think = "considering task " + std::to_string(r) + " option " +
                     std::to_string(j);
        resp.answer = plan_answer(p, r, j, j < p.correct);
    }
    if (p.fault == Fault::boilerplate)
        record.responses[0].answer += " " + std::string(kBoilerplate);
    return record;
}

}  // namespace

std::vector<QueryRecord> synth_records(const SynthSpec& spec) {
    std::vector<RecordPlan> plan = compute_plan(spec);
    std::vector<QueryRecord> records;
    records.reserve(spec.records);
    for (std::size_t r = 0; r < spec.records; ++r)
        records.push_back(build_record(plan, r, spec));
    return records;
}

SynthAssets write_synth_assets(const std::string& dir, const SynthSpec& spec,
                               const PipelineConfig& base) {
    fs::create_directories(dir);
    std::vector<RecordPlan> plan = compute_plan(spec);

    SynthAssets assets;
    assets.corpus = dir + "/corpus.jsonl";
    assets.eval_set = dir + "/eval_set.jsonl";
    assets.judge_fixture = dir + "/judge.jsonl";
    assets.reward_fixture = dir + "/reward.jsonl";
    assets.embedding_fixture = dir + "/embedding.jsonl";
    assets.ppl_fixture = dir + "/ppl.jsonl";
    assets.code_fixture = dir + "/code.jsonl";
    assets.config_path = dir + "/config.json";

    {
        // Streamed one record at a time so corpus size is not bounded by RAM.
        JsonlWriter out(assets.corpus);
        for (std::size_t r = 0; r < spec.records; ++r)
            out.write_line(serialize_record(build_record(plan, r, spec)));
        out.commit();
    }
    {
        JsonlWriter out(assets.eval_set);
        for (std::size_t k = 0; k < spec.eval_items; ++k) {
            json row = {{"id", eval_id(k)},
                        {"query", eval_query(k)},
                        {"vector", eval_vector(k)}};
            out.write_line(row.dump());
        }
        out.commit();
    }
    {
        JsonlWriter out(assets.embedding_fixture);
        for (std::size_t r = 0; r < spec.records; ++r) {
            json row = {{"id", plan[r].id}, {"vector", corpus_vector(plan[r])}};
            out.write_line(row.dump());
        }
        out.commit();
    }
    {
        JsonlWriter out(assets.ppl_fixture);
        for (std::size_t r = 0; r < spec.records; ++r) {
            double ppl = plan[r].fault == Fault::high_ppl
                             ? 25.0
                             : 5.0 + static_cast<double>(r % 10) * 0.5;
            json row = {{"id", plan[r].id}, {"ppl", ppl}};
            out.write_line(row.dump());
        }
        out.commit();
    }
    {
        JsonlWriter out(assets.judge_fixture);
        for (std::size_t r = 0; r < spec.records; ++r) {
            if (plan[r].category != Category::math &&
                plan[r].category != Category::science)
                continue;
            for (std::size_t j = 0; j < spec.responses_per_record; ++j) {
                bool correct = j < plan[r].correct;
                double score = plan[r].category == Category::math
                                   ? (correct ? 1.0 : 0.0)
                                   : (correct ? 5.0 : 0.0);
                json row = {{"id", plan[r].id},
                            {"response_index", j},
                            {"score", score}};
                out.write_line(row.dump());
            }
        }
        out.commit();
    }
    {
        JsonlWriter out(assets.reward_fixture);
        for (std::size_t r = 0; r < spec.records; ++r) {
            if (plan[r].category != Category::multiturn &&
                plan[r].category != Category::other)
                continue;
            for (std::size_t j = 0; j < spec.responses_per_record; ++j) {
                bool correct = j < plan[r].correct;
                double dim = correct ? 4.0 : 0.6;
                json row = {{"id", plan[r].id},
                            {"response_index", j},
                            {"coherence", dim},
                            {"correctness", dim},
                            {"helpfulness", dim}};
                out.write_line(row.dump());
            }
        }
        out.commit();
    }
    {
        JsonlWriter out(assets.code_fixture);
        for (std::size_t r = 0; r < spec.records; ++r) {
            if (plan[r].category != Category::code) continue;
            GroundTruth gt = plan_truth(plan[r], r);
            const auto& truth = std::get<CodeTruth>(gt);
            for (std::size_t j = 0; j < spec.responses_per_record; ++j) {
                bool correct = j < plan[r].correct;
                std::vector<bool> results(truth.test_cases.size(), correct);
                json row = {{"id", plan[r].id},
                            {"response_index", j},
                            {"results", results}};
                out.write_line(row.dump());
            }
        }
        out.commit();
    }

    PipelineConfig config = base;
    config.rng_seed = spec.seed;
    config.n_expected_responses = static_cast<int>(spec.responses_per_record);
    if (!config.cv_threshold_default) config.cv_threshold_default = 1.0;
    config.eval_set_path = "eval_set.jsonl";
    config.embedding = {"", "embedding.jsonl"};
    config.judge = {"", "judge.jsonl"};
    config.reward = {"", "reward.jsonl"};
    config.ppl = {"", "ppl.jsonl"};
    config.code = {"", "code.jsonl"};
    save_config(config, assets.config_path);
    return assets;
}

}  // namespace curator
