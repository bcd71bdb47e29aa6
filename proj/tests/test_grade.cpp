#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "curator/grade.hpp"
#include "curator/rng.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace curator;

namespace {

PipelineConfig graded_config(double cv_t = 0.3) {
    PipelineConfig config;
    config.cv_threshold_default = cv_t;
    config.rng_seed = 11;
    return config;
}

QueryRecord scored(const std::string& id, Category cat,
                   const std::vector<double>& scores,
                   const PipelineConfig& config) {
    return testutil::make_record(id, cat, scores, config);
}

}  // namespace

TEST_CASE("difficulty stats worked examples") {
    // Uniform mid scores: zero spread, zero cv.
    DifficultyStats a = difficulty_stats({0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(a.mean == doctest::Approx(0.5));
    CHECK(*a.std_dev == 0.0);
    CHECK(*a.cv == 0.0);

    // Same mean, wide spread: high cv separates it from the uniform case.
    DifficultyStats b = difficulty_stats({0.9, 0.1, 0.7, 0.3, 0.5});
    CHECK(b.mean == doctest::Approx(0.5));
    CHECK(b.max_score == doctest::Approx(0.9));
    CHECK(*b.std_dev == doctest::Approx(std::sqrt(0.1)));
    CHECK(*b.cv > 0.62);
    CHECK(*b.cv < 0.64);

    // Easy cluster: the cv stays small.
    DifficultyStats c = difficulty_stats({0.6, 0.8, 0.7, 0.7, 0.7});
    CHECK(c.mean == doctest::Approx(0.7));
    CHECK(*c.cv > 0.09);
    CHECK(*c.cv < 0.11);

    // Same absolute spread at a lower mean reads as relatively harder.
    DifficultyStats d = difficulty_stats({0.3, 0.5, 0.4, 0.4, 0.4});
    CHECK(d.mean == doctest::Approx(0.4));
    CHECK(*d.cv > 0.17);
    CHECK(*d.cv < 0.19);
    CHECK(*d.cv > *c.cv);  // scale-free ordering, not absolute-spread ordering
}

TEST_CASE("difficulty stats modes and errors") {
    DifficultyStats sample = difficulty_stats({0.9, 0.1, 0.7, 0.3, 0.5},
                                              StdMode::sample);
    DifficultyStats population = difficulty_stats({0.9, 0.1, 0.7, 0.3, 0.5},
                                                  StdMode::population);
    CHECK(*population.std_dev == doctest::Approx(std::sqrt(0.08)));
    CHECK(*population.std_dev < *sample.std_dev);

    CHECK_THROWS_AS(difficulty_stats({1.0}), GradeError);
    CHECK_THROWS_AS(difficulty_stats({}), GradeError);
    CHECK_THROWS_AS(difficulty_stats({0.0, 0.0}), GradeError);  // zero mean
}

TEST_CASE("pass_rate is strict") {
    CHECK(pass_rate({1.0, 0.0, 1.0, 0.0}, 0.99) == doctest::Approx(0.5));
    // Scores exactly at the threshold never pass.
    CHECK(pass_rate({0.99, 0.99}, 0.99) == 0.0);
    CHECK(pass_rate({1.0}, 0.99) == 1.0);
    CHECK_THROWS_AS(pass_rate({}, 0.5), GradeError);
}

TEST_CASE("grade_record fills stats and tolerates edge shapes") {
    PipelineConfig config = graded_config();
    QueryRecord rec = scored("g1", Category::math, {1.0, 0.0, 1.0, 0.0}, config);
    DifficultyStats st = grade_record(rec, config);
    CHECK(st.max_score == 1.0);
    CHECK(st.mean == doctest::Approx(0.5));
    CHECK(st.pass_rate == doctest::Approx(0.5));
    REQUIRE(st.cv.has_value());
    CHECK(*st.cv == doctest::Approx(std::sqrt(1.0 / 3.0) / 0.5));

    // One response: no spread statistics, but grading still succeeds.
    QueryRecord single = scored("g2", Category::math, {1.0}, config);
    st = grade_record(single, config);
    CHECK(!st.std_dev.has_value());
    CHECK(!st.cv.has_value());
    CHECK(st.pass_rate == 1.0);

    // All-zero scores: no cv (zero mean), still graded.
    QueryRecord zero = scored("g3", Category::math, {0.0, 0.0}, config);
    st = grade_record(zero, config);
    CHECK(st.mean == 0.0);
    CHECK(!st.cv.has_value());

    QueryRecord unverified = scored("g4", Category::math, {1.0}, config);
    unverified.responses[0].outcome.reset();
    CHECK_THROWS_AS(grade_record(unverified, config), GradeError);
}

TEST_CASE("stage1 worked outcomes") {
    PipelineConfig config = graded_config(0.3);

    // Max 0.9 < 0.99: discarded regardless of spread.
    QueryRecord low = scored("s1", Category::math, {0.9, 0.1, 0.7, 0.3, 0.5}, config);
    Stage1Result r = stage1_select(low, config);
    CHECK(r.decision.verdict == Verdict::discard);
    CHECK(r.decision.reason == "low_max_score");

    // Max passes and cv is high: retained with only the passing responses.
    QueryRecord hard = scored("s2", Category::math, {1.0, 0.0, 1.0, 0.0}, config);
    r = stage1_select(hard, config);
    CHECK(r.decision.verdict == Verdict::retain);
    CHECK(r.decision.reason == "high_cv");
    CHECK(r.retained_responses == std::vector<std::size_t>{0, 2});

    // Max passes, cv below threshold, non-conversational: easy, discarded.
    QueryRecord easy = scored("s3", Category::math, {1.0, 1.0, 1.0, 1.0}, config);
    r = stage1_select(easy, config);
    CHECK(r.decision.verdict == Verdict::discard);
    CHECK(r.decision.reason == "easy");

    // Conversational easy records go through the lottery instead.
    std::size_t kept = 0, dropped = 0;
    for (int i = 0; i < 400; ++i) {
        QueryRecord conv = scored("conv-" + std::to_string(i), Category::other,
                                  {0.9, 0.9, 0.9, 0.9}, config);
        r = stage1_select(conv, config);
        if (r.decision.verdict == Verdict::retain) {
            CHECK(r.decision.reason == "easy_kept");
            CHECK(r.retained_responses.size() == 4);  // lottery keeps everything
            ++kept;
        } else {
            CHECK(r.decision.reason == "easy");
            ++dropped;
        }
    }
    // The keep probability is 0.5; 400 draws land well inside [120, 280].
    CHECK(kept > 120);
    CHECK(dropped > 120);

    // Errors: unverified responses and single-response records.
    QueryRecord unverified = scored("s4", Category::math, {1.0, 1.0}, config);
    unverified.responses[1].outcome.reset();
    r = stage1_select(unverified, config);
    CHECK(r.decision.verdict == Verdict::error);
    CHECK(r.decision.reason == "not_verified");

    QueryRecord single = scored("s5", Category::math, {1.0}, config);
    r = stage1_select(single, config);
    CHECK(r.decision.verdict == Verdict::error);
    CHECK(r.decision.reason == "too_few_responses");

    QueryRecord zero = scored("s6", Category::math, {0.0, 0.0}, config);
    r = stage1_select(zero, config);
    CHECK(r.decision.verdict == Verdict::discard);  // gate fires before cv
    CHECK(r.decision.reason == "low_max_score");
}

TEST_CASE("stage1 max-score gate boundary") {
    PipelineConfig config = graded_config(10.0);  // cv branch never fires
    // Max exactly at the threshold survives the gate (the gate drops only
    // strictly-below) and then falls to the easy path.
    QueryRecord at = scored("b1", Category::math, {0.99, 0.5}, config);
    Stage1Result r = stage1_select(at, config);
    CHECK(r.decision.reason == "easy");
    QueryRecord below = scored("b2", Category::math,
                               {std::nextafter(0.99, 0.0), 0.5}, config);
    r = stage1_select(below, config);
    CHECK(r.decision.reason == "low_max_score");
}

TEST_CASE("stage1 cv threshold boundary is strict") {
    // cv == CV_t must not enter the high-cv branch.
    QueryRecord rec = scored("cvb", Category::math, {1.0, 0.0, 1.0, 0.0},
                             graded_config());
    PipelineConfig config = graded_config();
    DifficultyStats st = grade_record(rec, config);
    REQUIRE(st.cv.has_value());

    config.cv_threshold_default = *st.cv;  // exactly equal
    Stage1Result r = stage1_select(rec, config);
    CHECK(r.decision.reason == "easy");

    config.cv_threshold_default = std::nextafter(*st.cv, 0.0);
    r = stage1_select(rec, config);
    CHECK(r.decision.reason == "high_cv");
}

TEST_CASE("stage1 honors precomputed stats") {
    PipelineConfig config = graded_config(0.3);
    QueryRecord rec = scored("pre", Category::math, {1.0, 1.0, 1.0, 1.0}, config);
    // Scores say easy, but the stored stats say high cv: stats win.
    rec.stats = DifficultyStats{1.0, 0.5, 0.45, 0.9, 0.5};
    Stage1Result r = stage1_select(rec, config);
    CHECK(r.decision.reason == "high_cv");
}

TEST_CASE("stage1 agrees with the straight-line oracle") {
    PipelineConfig config = graded_config(0.25);
    config.rng_seed = 77;

    SplitMix64 gen(123);
    int checked = 0;
    for (int i = 0; i < 10000; ++i) {
        Category cat = kAllCategories[gen.uniform_below(kCategoryCount)];
        std::size_t n = 2 + gen.uniform_below(5);
        std::vector<double> scores;
        ScoreScale scale = native_scale(cat);
        for (std::size_t j = 0; j < n; ++j) {
            // Mix exact boundary values in with uniform draws.
            switch (gen.uniform_below(4)) {
                case 0: scores.push_back(config.pass_threshold(cat)); break;
                case 1: scores.push_back(scale.max); break;
                case 2: scores.push_back(0.0); break;
                default: scores.push_back(scale.max * gen.uniform01());
            }
        }
        QueryRecord rec = scored("fuzz-" + std::to_string(i), cat, scores, config);

        Stage1Result got = stage1_select(rec, config);
        oracle::Stage1Outcome want = oracle::stage1(rec, config);
        switch (want.kind) {
            case oracle::Stage1Outcome::discard_low_max:
                CHECK(got.decision.reason == "low_max_score");
                break;
            case oracle::Stage1Outcome::retain_high_cv:
                CHECK(got.decision.reason == "high_cv");
                CHECK(got.retained_responses == want.retained);
                break;
            case oracle::Stage1Outcome::retain_easy_kept:
                CHECK(got.decision.reason == "easy_kept");
                CHECK(got.retained_responses == want.retained);
                break;
            case oracle::Stage1Outcome::discard_easy:
                CHECK(got.decision.reason == "easy");
                break;
        }
        ++checked;
    }
    CHECK(checked == 10000);
}

TEST_CASE("stage2 eligibility requires high cv and near-perfect max") {
    PipelineConfig config = graded_config(0.3);
    QueryRecord rec = scored("e1", Category::math, {1.0, 0.0, 1.0, 0.0}, config);
    rec.stats = grade_record(rec, config);
    CHECK(stage2_eligible(rec, config));

    // Max below the normalized bar.
    QueryRecord low = scored("e2", Category::math, {0.98, 0.0}, config);
    low.stats = grade_record(low, config);
    CHECK(!stage2_eligible(low, config));

    // cv at the threshold exactly: not eligible.
    QueryRecord at = scored("e3", Category::math, {1.0, 0.0, 1.0, 0.0}, config);
    at.stats = grade_record(at, config);
    PipelineConfig eq = config;
    eq.cv_threshold_default = *at.stats->cv;
    CHECK(!stage2_eligible(at, eq));

    // Science uses its native scale: max 5.0 normalizes to 1.0.
    QueryRecord sci = scored("e4", Category::science, {5.0, 0.0, 5.0, 0.0}, config);
    sci.stats = grade_record(sci, config);
    CHECK(stage2_eligible(sci, config));
    QueryRecord sci_low = scored("e5", Category::science, {4.9, 0.0}, config);
    sci_low.stats = grade_record(sci_low, config);
    CHECK(!stage2_eligible(sci_low, config));

    // No stats: never eligible.
    QueryRecord bare = scored("e6", Category::math, {1.0, 0.0}, config);
    CHECK(!stage2_eligible(bare, config));
}

TEST_CASE("stage2 sampling picks only qualifying responses") {
    PipelineConfig config = graded_config(0.3);
    QueryRecord rec = scored("p1", Category::math, {1.0, 0.0, 1.0, 0.0}, config);
    std::int64_t pick = stage2_sample_response(rec, config);
    CHECK((pick == 0 || pick == 2));
    // Deterministic for a fixed (seed, id).
    CHECK(stage2_sample_response(rec, config) == pick);

    QueryRecord none = scored("p2", Category::math, {0.5, 0.5}, config);
    CHECK(stage2_sample_response(none, config) == -1);

    // Different records sample independently; over many records both
    // qualifying responses appear.
    bool saw0 = false, saw2 = false;
    for (int i = 0; i < 64; ++i) {
        QueryRecord r = scored("p3-" + std::to_string(i), Category::math,
                               {1.0, 0.0, 1.0, 0.0}, config);
        std::int64_t c = stage2_sample_response(r, config);
        if (c == 0) saw0 = true;
        if (c == 2) saw2 = true;
    }
    CHECK(saw0);
    CHECK(saw2);
}

TEST_CASE("stage2 selection agrees with the brute-force oracle") {
    PipelineConfig config = graded_config(0.2);
    config.rng_seed = 31;

    SplitMix64 gen(999);
    std::vector<QueryRecord> records;
    for (int i = 0; i < 1000; ++i) {
        std::size_t n = 2 + gen.uniform_below(4);
        std::vector<double> scores;
        for (std::size_t j = 0; j < n; ++j) {
            switch (gen.uniform_below(3)) {
                case 0: scores.push_back(1.0); break;
                case 1: scores.push_back(0.0); break;
                default: scores.push_back(gen.uniform01());
            }
        }
        QueryRecord rec = scored("s2-" + std::to_string(i), Category::math,
                                 scores, config);
        rec.stats = grade_record(rec, config);
        records.push_back(std::move(rec));
    }

    for (std::int64_t top_k : {std::int64_t{-1}, std::int64_t{0},
                               std::int64_t{17}, std::int64_t{100},
                               std::int64_t{100000}}) {
        std::vector<Stage2Pick> got = stage2_select(records, config, top_k);
        std::vector<oracle::Stage2Choice> want =
            oracle::stage2(records, config, top_k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(records[got[i].record_index].id == want[i].id);
            CHECK(got[i].chosen_response == want[i].response);
        }
    }
}

TEST_CASE("stage2 selection is worker invariant") {
    PipelineConfig config = graded_config(0.2);
    config.rng_seed = 5;
    SplitMix64 gen(2024);
    std::vector<QueryRecord> records;
    for (int i = 0; i < 600; ++i) {
        std::vector<double> scores = {gen.uniform01() < 0.5 ? 1.0 : 0.0,
                                      gen.uniform01() < 0.5 ? 1.0 : 0.0,
                                      gen.uniform01()};
        QueryRecord rec = scored("w-" + std::to_string(i), Category::math,
                                 scores, config);
        rec.stats = grade_record(rec, config);
        records.push_back(std::move(rec));
    }
    std::vector<Stage2Pick> serial = stage2_select(records, config, 50, 1);
    for (int workers : {2, 4, 16}) {
        std::vector<Stage2Pick> parallel = stage2_select(records, config, 50, workers);
        REQUIRE(parallel.size() == serial.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(parallel[i].record_index == serial[i].record_index);
            CHECK(parallel[i].chosen_response == serial[i].chosen_response);
        }
    }
}

TEST_CASE("stage2 ties on cv rank by ascending id") {
    PipelineConfig config = graded_config(0.1);
    std::vector<QueryRecord> records;
    // Identical score vectors give identical cv; ids break the tie.
    for (const char* id : {"zz", "aa", "mm"}) {
        QueryRecord rec = scored(id, Category::math, {1.0, 0.0}, config);
        rec.stats = grade_record(rec, config);
        records.push_back(std::move(rec));
    }
    std::vector<Stage2Pick> picks = stage2_select(records, config, 2);
    REQUIRE(picks.size() == 2);
    CHECK(records[picks[0].record_index].id == "aa");
    CHECK(records[picks[1].record_index].id == "mm");
}
