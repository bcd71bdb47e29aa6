#include <doctest.h>

#include <string>
#include <vector>

#include "curator/report.hpp"
#include "curator/types.hpp"

using namespace curator;

namespace {

QueryRecord rec(const std::string& id, Category category,
                const std::vector<std::string>& answers) {
    QueryRecord r;
    r.id = id;
    r.source = "unit";
    r.category = category;
    Turn t;
    t.content = "question for " + id;
    r.turns.push_back(t);
    for (const std::string& answer : answers) {
        Response resp;
        resp.model = "m";
        resp.think = "plan";
        resp.answer = answer;
        r.responses.push_back(resp);
    }
    return r;
}

QueryRecord rated(const std::string& id, Category category, double pass_rate) {
    QueryRecord r = rec(id, category, {"x"});
    DifficultyStats stats;
    stats.max_score = 1.0;
    stats.mean = 0.5;
    stats.pass_rate = pass_rate;
    r.stats = stats;
    return r;
}

}  // namespace

TEST_CASE("category shares mirror instance and answer-token counts") {
    PipelineConfig config;
    std::vector<QueryRecord> records = {
        rec("m1", Category::math, {"one two three"}),
        rec("m2", Category::math, {"four five"}),
        rec("m3", Category::math, {"six"}),
        rec("c1", Category::code, {"gamma delta epsilon"}),
    };
    // Embedded think must not count toward answer tokens.
    Response embedded;
    embedded.model = "m";
    embedded.answer = "<think>lots of hidden planning</think>alpha beta";
    records[3].responses.push_back(embedded);

    std::vector<CategoryShare> shares = category_distribution(records, config);
    REQUIRE(shares.size() == 2);  // categories with no records are omitted

    CHECK(shares[0].category == Category::math);
    CHECK(shares[0].instances == 3);
    CHECK(shares[0].instance_share == 0.75);
    CHECK(shares[0].answer_tokens == 6);
    CHECK(shares[0].token_share == doctest::Approx(6.0 / 11.0));

    CHECK(shares[1].category == Category::code);
    CHECK(shares[1].instances == 1);
    CHECK(shares[1].instance_share == 0.25);
    CHECK(shares[1].answer_tokens == 5);
    CHECK(shares[1].token_share == doctest::Approx(5.0 / 11.0));

    double instance_total = 0.0, token_total = 0.0;
    for (const CategoryShare& s : shares) {
        instance_total += s.instance_share;
        token_total += s.token_share;
    }
    CHECK(instance_total == doctest::Approx(1.0));
    CHECK(token_total == doctest::Approx(1.0));
}

TEST_CASE("streamed counts merge into the same distribution") {
    PipelineConfig config;
    std::vector<QueryRecord> records = {
        rec("a", Category::math, {"one two"}),
        rec("b", Category::other, {"three"}),
        rec("c", Category::math, {"four five six"}),
        rec("d", Category::science, {"seven"}),
    };

    CategoryCounts left, right;
    left.add(records[0], config);
    left.add(records[1], config);
    right.add(records[2], config);
    right.add(records[3], config);
    left.merge(right);

    std::vector<CategoryShare> merged = distribution_from_counts(left);
    std::vector<CategoryShare> direct = category_distribution(records, config);
    REQUIRE(merged.size() == direct.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
        CHECK(merged[i].category == direct[i].category);
        CHECK(merged[i].instances == direct[i].instances);
        CHECK(merged[i].instance_share == direct[i].instance_share);
        CHECK(merged[i].answer_tokens == direct[i].answer_tokens);
        CHECK(merged[i].token_share == direct[i].token_share);
    }

    CHECK_THROWS_AS(category_distribution({}, config), ReportError);
    CHECK_THROWS_AS(distribution_from_counts(CategoryCounts{}), ReportError);
}

TEST_CASE("histogram seeds canonical buckets and counts exact rates") {
    std::vector<QueryRecord> records = {
        rated("h1", Category::math, 0.25),
        rated("h2", Category::math, 0.25),
        rated("h3", Category::math, 1.0),
        rated("h4", Category::code, 0.0),
    };
    PassRateHistogram hist = pass_rate_histogram(records, 4);

    // Every category carries the canonical grid even with no records.
    REQUIRE(hist.buckets.size() == kCategoryCount);
    for (Category c : kAllCategories) {
        REQUIRE(hist.buckets.count(c) == 1);
        const auto& rates = hist.buckets.at(c);
        REQUIRE(rates.size() >= 5);
        for (double rate : {0.0, 0.25, 0.5, 0.75, 1.0}) CHECK(rates.count(rate) == 1);
    }

    const auto& math = hist.buckets.at(Category::math);
    CHECK(math.at(0.25) == 2);
    CHECK(math.at(1.0) == 1);
    CHECK(math.at(0.0) == 0);
    CHECK(math.at(0.5) == 0);
    CHECK(math.at(0.75) == 0);
    CHECK(hist.buckets.at(Category::code).at(0.0) == 1);
    CHECK(hist.buckets.at(Category::science).at(1.0) == 0);

    SUBCASE("off-grid rates get their own bucket") {
        PassRateHistogram h2 = pass_rate_histogram({rated("x", Category::science, 1.0 / 3.0)}, 4);
        CHECK(h2.buckets.at(Category::science).size() == 6);
        CHECK(h2.buckets.at(Category::science).at(1.0 / 3.0) == 1);
    }

    SUBCASE("records without stats are an error") {
        QueryRecord bare = rec("nostats", Category::math, {"x"});
        CHECK_THROWS_WITH_AS(pass_rate_histogram({bare}, 4),
                             "pass_rate_histogram: record 'nostats' has no stats",
                             ReportError);
    }

    SUBCASE("non-positive n leaves the grid unseeded") {
        PassRateHistogram h;
        h.seed_canonical(0);
        CHECK(h.buckets.empty());
        h.seed_canonical(-3);
        CHECK(h.buckets.empty());
    }

    SUBCASE("merge sums overlapping buckets") {
        PassRateHistogram a, b;
        a.add(Category::math, 0.5);
        a.add(Category::math, 0.5);
        b.add(Category::math, 0.5);
        b.add(Category::code, 1.0);
        a.merge(b);
        CHECK(a.buckets.at(Category::math).at(0.5) == 3);
        CHECK(a.buckets.at(Category::code).at(1.0) == 1);
    }
}

TEST_CASE("funnel report telescopes stage counts") {
    json manifest = {
        {"stages",
         json::array(
             {{{"name", "filter"},
               {"records_in", 100},
               {"records_out", 92},
               {"discards",
                {{"duplicate", 4}, {"incomplete", 1}, {"special_content", 2}, {"unicode_ratio", 1}}}},
              {{"name", "decontam"},
               {"records_in", 92},
               {"records_out", 92}}})}};

    std::vector<FunnelStage> stages = funnel_report(manifest);
    REQUIRE(stages.size() == 2);
    CHECK(stages[0].name == "filter");
    CHECK(stages[0].records_in == 100);
    CHECK(stages[0].records_out == 92);
    CHECK(stages[0].discards.at("duplicate") == 4);
    CHECK(stages[0].discards.size() == 4);
    CHECK(stages[1].name == "decontam");
    CHECK(stages[1].discards.empty());

    SUBCASE("counts that do not telescope throw") {
        json bad = manifest;
        bad["stages"][0]["records_out"] = 93;
        CHECK_THROWS_AS(funnel_report(bad), ReportError);
    }

    SUBCASE("stage input must chain from previous output") {
        json bad = manifest;
        bad["stages"][1]["records_in"] = 91;
        bad["stages"][1]["records_out"] = 91;
        CHECK_THROWS_AS(funnel_report(bad), ReportError);
    }

    SUBCASE("missing fields throw") {
        CHECK_THROWS_AS(funnel_report(json::object()), ReportError);
        CHECK_THROWS_AS(funnel_report(json{{"stages", 7}}), ReportError);
        json bad = manifest;
        bad["stages"][0].erase("records_out");
        CHECK_THROWS_AS(funnel_report(bad), ReportError);
    }
}

TEST_CASE("serializations carry the exact fields") {
    CategoryShare math;
    math.category = Category::math;
    math.instances = 3;
    math.instance_share = 0.75;
    math.answer_tokens = 6;
    math.token_share = 0.5;
    CategoryShare code;
    code.category = Category::code;
    code.instances = 1;
    code.instance_share = 0.25;
    code.answer_tokens = 6;
    code.token_share = 0.5;
    std::vector<CategoryShare> shares = {math, code};

    json dist = distribution_to_json(shares);
    REQUIRE(dist.contains("category_distribution"));
    REQUIRE(dist["category_distribution"].size() == 2);
    CHECK(dist["category_distribution"][0]["category"] == "math");
    CHECK(dist["category_distribution"][0]["instances"] == 3);
    CHECK(dist["category_distribution"][1]["token_share"] == 0.5);

    CHECK(distribution_to_csv(shares) ==
          "category,instances,instance_share,answer_tokens,token_share\n"
          "math,3,0.75,6,0.5\n"
          "code,1,0.25,6,0.5\n");

    PassRateHistogram hist;
    hist.add(Category::math, 0.5);
    hist.add(Category::math, 0.5);
    hist.add(Category::math, 1.0);
    json hj = histogram_to_json(hist);
    REQUIRE(hj.contains("pass_rate_histogram"));
    REQUIRE(hj["pass_rate_histogram"].contains("math"));
    CHECK(hj["pass_rate_histogram"]["math"][0]["pass_rate"] == 0.5);
    CHECK(hj["pass_rate_histogram"]["math"][0]["count"] == 2);
    CHECK(hj["pass_rate_histogram"]["math"][1]["count"] == 1);

    CHECK(histogram_to_csv(hist) ==
          "category,pass_rate,count\n"
          "math,0.5,2\n"
          "math,1,1\n");

    FunnelStage stage;
    stage.name = "filter";
    stage.records_in = 10;
    stage.records_out = 9;
    stage.discards["duplicate"] = 1;
    json fj = funnel_to_json({stage});
    REQUIRE(fj.contains("funnel"));
    CHECK(fj["funnel"][0]["stage"] == "filter");
    CHECK(fj["funnel"][0]["records_in"] == 10);
    CHECK(fj["funnel"][0]["discards"]["duplicate"] == 1);
}

TEST_CASE("text renderings stay aligned and name every row") {
    CategoryShare share;
    share.category = Category::instruction_follow;
    share.instances = 2;
    share.instance_share = 1.0;
    share.answer_tokens = 7;
    share.token_share = 1.0;
    std::string dist = render_distribution({share});
    CHECK(dist.find("category") != std::string::npos);
    CHECK(dist.find("instruction_follow") != std::string::npos);
    CHECK(dist.find("100.0%") != std::string::npos);

    PassRateHistogram hist;
    hist.add(Category::other, 0.25);
    std::string rendered = render_histogram(hist);
    CHECK(rendered.find("other") != std::string::npos);
    CHECK(rendered.find("0.25") != std::string::npos);

    FunnelStage with_discards;
    with_discards.name = "qa";
    with_discards.records_in = 5;
    with_discards.records_out = 3;
    with_discards.discards["high_ppl"] = 2;
    FunnelStage clean;
    clean.name = "grade";
    clean.records_in = 3;
    clean.records_out = 3;
    std::string funnel = render_funnel({with_discards, clean});
    CHECK(funnel.find("high_ppl=2") != std::string::npos);
    CHECK(funnel.find("grade") != std::string::npos);
    CHECK(funnel.find('-') != std::string::npos);  // empty discard column
}
