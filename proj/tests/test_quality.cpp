#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "curator/quality.hpp"
#include "curator/rng.hpp"
#include "curator/text.hpp"
#include "curator/types.hpp"
#include "oracles.hpp"

using namespace curator;

namespace {

QueryRecord qa_record(const std::string& id,
                      const std::vector<std::pair<std::string, std::string>>& pairs,
                      Category category = Category::math) {
    QueryRecord r;
    r.id = id;
    r.source = "unit";
    r.category = category;
    Turn t;
    t.assistant = false;
    t.content = "question for " + id;
    r.turns.push_back(t);
    for (const auto& [think, answer] : pairs) {
        Response resp;
        resp.model = "m";
        resp.think = think;
        resp.answer = answer;
        r.responses.push_back(resp);
    }
    return r;
}

// Deterministic filler prose over a small vocabulary so short windows repeat.
std::string random_text(SplitMix64& rng, std::size_t words, std::size_t vocab) {
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i > 0) out.push_back(i % 7 == 0 ? '\n' : ' ');
        out += "w" + std::to_string(rng.uniform_below(vocab));
    }
    return out;
}

// Exactly twenty tokens; every window of the default n-gram width that starts
// inside it is unique to it except the full-span one.
const std::string kBoilerplate =
    "as an assistant i must remind you that all results here are provided "
    "without any warranty of correctness or fitness";

std::string count_key(const std::string& text, int n) {
    auto tokens = tokenize(text, TokenizerMode::whitespace);
    REQUIRE(tokens.size() >= static_cast<std::size_t>(n));
    return NgramIndex::window_key(tokens, 0, static_cast<std::size_t>(n));
}

struct FixedPpl final : PplProvider {
    double score = 0.0;
    std::string last_id;
    std::string last_text;

    double perplexity(const std::string& record_id,
                      const std::string& text) override {
        last_id = record_id;
        last_text = text;
        return score;
    }
};

}  // namespace

TEST_CASE("ngram_texts lists think and answer of every response") {
    QueryRecord r = qa_record("ng-1", {{"T zero", "A zero"},
                                       {"", "<think>plan steps</think>final words"}});
    std::vector<std::string> texts = ngram_texts(r);
    REQUIRE(texts.size() == 4);
    CHECK(texts[0] == "T zero");
    CHECK(texts[1] == "A zero");
    CHECK(texts[2] == "plan steps");
    CHECK(texts[3] == "final words");

    CHECK(ngram_texts(qa_record("ng-2", {})).empty());
}

TEST_CASE("window_key joins tokens with the unit separator") {
    std::vector<std::string_view> tokens{"alpha", "beta", "gamma"};
    CHECK(NgramIndex::window_key(tokens, 0, 2) == "alpha\x1f"
                                                  "beta");
    CHECK(NgramIndex::window_key(tokens, 1, 2) == "beta\x1f"
                                                  "gamma");
    CHECK(NgramIndex::window_key(tokens, 0, 3) == "alpha\x1f"
                                                  "beta\x1f"
                                                  "gamma");
    CHECK(NgramIndex::window_key(tokens, 2, 1) == "gamma");
}

TEST_CASE("index counts match a naive recount over random prose") {
    PipelineConfig config;
    config.ngram_n = 3;
    config.ngram_max_count = 2;

    SplitMix64 rng(2024);
    std::vector<QueryRecord> records;
    for (int i = 0; i < 200; ++i) {
        // Lengths 0..39 include texts shorter than the window width.
        std::string think = random_text(rng, rng.uniform_below(40), 30);
        std::string answer = random_text(rng, rng.uniform_below(40), 30);
        records.push_back(qa_record("r" + std::to_string(i), {{think, answer}}));
    }

    NgramIndex index = NgramIndexBuilder::build(records, config);

    std::vector<std::string> all_texts;
    for (const QueryRecord& r : records)
        for (std::string& t : ngram_texts(r)) all_texts.push_back(std::move(t));
    std::map<std::string, std::uint64_t> expected =
        oracle::ngram_counts(all_texts, config.ngram_n);

    std::uint64_t total = 0;
    for (const auto& [key, count] : expected) total += count;
    CHECK(index.total_windows() == total);
    CHECK(index.distinct_windows() == expected.size());
    CHECK(index.n() == 3);
    CHECK(index.mode() == TokenizerMode::whitespace);

    for (const auto& [key, count] : expected) CHECK(index.window_count(key) == count);
    CHECK(index.window_count("zz\x1fzz\x1fzz") == 0);
    CHECK(index.window_count("w1\x1fw2") == 0);  // wrong arity for n=3

    for (const std::string& text : all_texts) {
        std::uint64_t expected_max =
            oracle::max_window_count(expected, text, config.ngram_n);
        CHECK(index.max_window_count(text) == expected_max);
        for (std::uint64_t bar : {0ull, 1ull, 2ull, 3ull, 5ull})
            CHECK(index.has_window_above(text, bar) == (expected_max > bar));
    }
}

TEST_CASE("a window is repetitive past the count bound, not at it") {
    PipelineConfig config;  // n = 20, max_count = 20
    auto flood = [](int copies) {
        std::vector<QueryRecord> records;
        for (int i = 0; i < copies; ++i)
            records.push_back(qa_record(
                "b" + std::to_string(i),
                {{"some honest reasoning", kBoilerplate + " u" + std::to_string(i)}}));
        return records;
    };
    const std::string key = count_key(kBoilerplate, 20);

    SUBCASE("twenty-one copies cross the bound") {
        std::vector<QueryRecord> records = flood(21);
        NgramIndex index = NgramIndexBuilder::build(records, config);
        CHECK(index.window_count(key) == 21);
        CHECK(index.max_window_count(records[0].responses[0].answer) == 21);
        for (const QueryRecord& r : records) {
            NgramVerdict v = ngram_filter(r, index, config);
            CHECK(v.decision.verdict == Verdict::discard);
            CHECK(v.decision.reason == "repetitive");
            REQUIRE(v.response_flagged.size() == 1);
            CHECK(v.response_flagged[0]);
        }
    }

    SUBCASE("exactly twenty copies stay") {
        std::vector<QueryRecord> records = flood(20);
        NgramIndex index = NgramIndexBuilder::build(records, config);
        CHECK(index.window_count(key) == 20);
        for (const QueryRecord& r : records) {
            NgramVerdict v = ngram_filter(r, index, config);
            CHECK(v.decision.verdict == Verdict::retain);
            CHECK_FALSE(v.response_flagged[0]);
        }
    }
}

TEST_CASE("per-response removal keeps records with a clean response") {
    PipelineConfig config;
    std::vector<QueryRecord> records;
    for (int i = 0; i < 21; ++i)
        records.push_back(qa_record(
            "f" + std::to_string(i),
            {{"thinking", kBoilerplate + " u" + std::to_string(i)}}));
    QueryRecord mixed =
        qa_record("mixed", {{"thinking", kBoilerplate + " mixed tail"},
                            {"thinking", "a perfectly ordinary short answer"}});
    QueryRecord all_flagged =
        qa_record("all", {{"thinking", kBoilerplate + " tail one"},
                          {"thinking", kBoilerplate + " tail two"}});
    records.push_back(mixed);
    records.push_back(all_flagged);
    NgramIndex index = NgramIndexBuilder::build(records, config);

    SUBCASE("record-level mode discards on any flagged response") {
        config.ngram_per_response_removal = false;
        NgramVerdict v = ngram_filter(mixed, index, config);
        CHECK(v.decision.verdict == Verdict::discard);
        CHECK(v.decision.reason == "repetitive");
        CHECK(v.response_flagged == std::vector<bool>{true, false});
    }

    SUBCASE("per-response mode keeps the record unless all are flagged") {
        config.ngram_per_response_removal = true;
        NgramVerdict kept = ngram_filter(mixed, index, config);
        CHECK(kept.decision.verdict == Verdict::retain);
        CHECK(kept.response_flagged == std::vector<bool>{true, false});

        NgramVerdict dropped = ngram_filter(all_flagged, index, config);
        CHECK(dropped.decision.verdict == Verdict::discard);
        CHECK(dropped.response_flagged == std::vector<bool>{true, true});
    }

    SUBCASE("clean records are untouched in both modes") {
        QueryRecord clean = qa_record("clean", {{"thinking", "short and sweet"}});
        for (bool mode : {false, true}) {
            config.ngram_per_response_removal = mode;
            NgramVerdict v = ngram_filter(clean, index, config);
            CHECK(v.decision.verdict == Verdict::retain);
            CHECK(v.response_flagged == std::vector<bool>{false});
        }
    }
}

TEST_CASE("ppl_text stitches query and responses") {
    PipelineConfig config;
    QueryRecord r = qa_record("p-1", {{"hidden plan", "shown answer"},
                                      {"", "second answer"}});
    Turn assistant;
    assistant.assistant = true;
    assistant.content = "ignored assistant turn";
    r.turns.push_back(assistant);

    config.ppl_include_think = false;
    CHECK(ppl_text(r, config) == "question for p-1\nshown answer\nsecond answer");

    config.ppl_include_think = true;
    CHECK(ppl_text(r, config) ==
          "question for p-1\nhidden plan\nshown answer\nsecond answer");
}

TEST_CASE("perplexity gate discards strictly above the threshold") {
    PipelineConfig config;  // ppl_threshold = 20.0
    QueryRecord r = qa_record("p-2", {{"plan", "answer"}});
    FixedPpl scorer;

    scorer.score = 20.0;
    SelectionDecision at = ppl_filter(r, scorer, config);
    CHECK(at.verdict == Verdict::retain);
    CHECK(scorer.last_id == "p-2");
    CHECK(scorer.last_text == ppl_text(r, config));

    scorer.score = std::nextafter(20.0, 1e9);
    SelectionDecision above = ppl_filter(r, scorer, config);
    CHECK(above.verdict == Verdict::discard);
    CHECK(above.reason == "high_ppl");
    CHECK(above.stage == "qa");

    scorer.score = 3.5;
    CHECK(ppl_filter(r, scorer, config).verdict == Verdict::retain);
}

TEST_CASE("structural gate checks turn parity and response content") {
    SUBCASE("conversations must end on a user turn") {
        QueryRecord one = qa_record("s-1", {{"t", "a"}}, Category::multiturn);
        CHECK(structural_validate(one).verdict == Verdict::retain);

        QueryRecord two = qa_record("s-2", {{"t", "a"}}, Category::multiturn);
        Turn reply;
        reply.assistant = true;
        reply.content = "earlier reply";
        two.turns.push_back(reply);
        SelectionDecision d = structural_validate(two);
        CHECK(d.verdict == Verdict::discard);
        CHECK(d.reason == "odd_turns");
        CHECK(d.stage == "qa");

        Turn follow_up;
        follow_up.assistant = false;
        follow_up.content = "and another question";
        two.turns.push_back(follow_up);
        CHECK(structural_validate(two).verdict == Verdict::retain);
    }

    SUBCASE("parity only binds conversations") {
        QueryRecord r = qa_record("s-3", {{"t", "a"}});
        Turn reply;
        reply.assistant = true;
        reply.content = "context";
        r.turns.push_back(reply);
        CHECK(structural_validate(r).verdict == Verdict::retain);
    }

    SUBCASE("blank think or answer is rejected") {
        QueryRecord no_think = qa_record("s-4", {{"", "just an answer"}});
        SelectionDecision d1 = structural_validate(no_think);
        CHECK(d1.verdict == Verdict::discard);
        CHECK(d1.reason == "no_think");

        QueryRecord ws_think = qa_record("s-5", {{" \t\n", "answer"}});
        CHECK(structural_validate(ws_think).reason == "no_think");

        QueryRecord no_answer = qa_record("s-6", {{"plan", "   "}});
        SelectionDecision d2 = structural_validate(no_answer);
        CHECK(d2.verdict == Verdict::discard);
        CHECK(d2.reason == "no_answer");

        // A blank think wins over a blank answer within one response.
        QueryRecord both = qa_record("s-7", {{"", ""}});
        CHECK(structural_validate(both).reason == "no_think");

        // One bad response discards the record even if others are fine.
        QueryRecord second_bad = qa_record("s-8", {{"plan", "fine"}, {"plan", ""}});
        CHECK(structural_validate(second_bad).reason == "no_answer");
    }

    SUBCASE("think embedded in the answer body counts") {
        QueryRecord r = qa_record("s-9", {{"", "<think>plan</think>done"}});
        CHECK(structural_validate(r).verdict == Verdict::retain);
    }
}

TEST_CASE("fingerprint feed matches the convenience build") {
    PipelineConfig config;
    config.ngram_n = 4;
    config.ngram_max_count = 3;

    SplitMix64 rng(77);
    std::vector<QueryRecord> records;
    for (int i = 0; i < 60; ++i)
        records.push_back(qa_record("pp" + std::to_string(i),
                                    {{random_text(rng, 25, 12),
                                      random_text(rng, 25, 12)}}));

    NgramIndex serial = NgramIndexBuilder::build(records, config);

    // The split feed a parallel caller uses: fingerprints first, exact pass after.
    NgramIndexBuilder builder(config.ngram_n, config.tokenizer,
                              config.ngram_max_count);
    for (const QueryRecord& r : records)
        for (const std::string& text : ngram_texts(r))
            builder.add_fingerprints(builder.fingerprints_of(text));
    builder.prepare_exact_pass();
    for (const QueryRecord& r : records)
        for (const std::string& text : ngram_texts(r)) builder.add_exact_text(text);
    NgramIndex split = builder.finish();

    CHECK(split.total_windows() == serial.total_windows());
    CHECK(split.distinct_windows() == serial.distinct_windows());

    std::vector<std::string> all_texts;
    for (const QueryRecord& r : records)
        for (std::string& t : ngram_texts(r)) all_texts.push_back(std::move(t));
    std::map<std::string, std::uint64_t> expected =
        oracle::ngram_counts(all_texts, config.ngram_n);
    for (const auto& [key, count] : expected) {
        CHECK(split.window_count(key) == count);
        CHECK(serial.window_count(key) == count);
    }
    for (const std::string& text : all_texts)
        CHECK(split.max_window_count(text) == serial.max_window_count(text));
}
