#include <doctest.h>

#include <string>

#include "curator/filters.hpp"

#include "helpers.hpp"

using namespace curator;

namespace {

QueryRecord with_query(const std::string& text) {
    PipelineConfig config;
    QueryRecord rec = testutil::make_record("q", Category::other, {0.5}, config);
    rec.turns = {{false, text}};
    return rec;
}

std::string hygiene_reason(const std::string& query) {
    PipelineConfig config;
    SelectionDecision d = filter_hygiene(with_query(query), config);
    return d.verdict == Verdict::retain ? "" : d.reason;
}

}  // namespace

TEST_CASE("normalize_for_dedup collapses whitespace but keeps case") {
    CHECK(normalize_for_dedup("  What   is\t2+2? ") == "What is 2+2?");
    CHECK(normalize_for_dedup("What is 2+2?") != normalize_for_dedup("what is 2+2?"));
}

TEST_CASE("dedup is first wins and whitespace insensitive") {
    DedupSet seen;
    CHECK(seen.insert_if_new(with_query("What is 2+2?")));
    CHECK(!seen.insert_if_new(with_query("What  is\n2+2?")));
    CHECK(seen.insert_if_new(with_query("What is 2+3?")));
    CHECK(seen.size() == 2);
}

TEST_CASE("dedup key covers all user turns") {
    PipelineConfig config;
    QueryRecord a = testutil::make_record("a", Category::multiturn, {0.5}, config);
    a.turns = {{false, "first"}, {true, "reply"}, {false, "second"}};
    QueryRecord b = a;
    b.id = "b";
    b.turns[1].content = "different reply";  // assistant turns are not keyed
    QueryRecord c = a;
    c.id = "c";
    c.turns[2].content = "changed";

    CHECK(DedupSet::key_for(a) == DedupSet::key_for(b));
    CHECK(DedupSet::key_for(a) != DedupSet::key_for(c));
}

TEST_CASE("unicode_ratio counts code points") {
    CHECK(unicode_ratio("") == 0.0);
    CHECK(unicode_ratio("plain ascii") == 0.0);
    // One Greek letter out of two code points.
    CHECK(unicode_ratio("a\xce\xb1") == doctest::Approx(0.5));
    CHECK(unicode_ratio("\xce\xb1\xce\xb2") == doctest::Approx(1.0));
}

TEST_CASE("hygiene verdicts") {
    CHECK(hygiene_reason("What is the capital of France?").empty());
    CHECK(hygiene_reason("") == "incomplete");
    CHECK(hygiene_reason("   \n\t ") == "incomplete");
    // Trailing ellipsis marks a truncated crawl.
    CHECK(hygiene_reason("The answer is\xe2\x80\xa6") == "incomplete");
    // Unbalanced code fence.
    CHECK(hygiene_reason("Fix this:\n```python\nprint(1)") == "incomplete");
    CHECK(hygiene_reason("Fix this:\n```python\nprint(1)\n```\nplease").empty());

    CHECK(hygiene_reason("see http://example.com for details") == "special_content");
    CHECK(hygiene_reason("see https://example.com") == "special_content");
    CHECK(hygiene_reason("visit www.example.com today") == "special_content");
    // "www." must start a token; an infix match is fine.
    CHECK(hygiene_reason("the word awww. is not a link").empty());

    CHECK(hygiene_reason("<table><tr><td>x</td></tr></table>") == "special_content");
    CHECK(hygiene_reason("| a | b |\n| 1 | 2 |") == "special_content");
    // A single piped line is not a table.
    CHECK(hygiene_reason("choose a | b please").empty());
}

TEST_CASE("hygiene unicode boundary is strict") {
    PipelineConfig config;
    REQUIRE(config.unicode_ratio_max == doctest::Approx(0.5));
    // Exactly half non-ASCII: ratio == max, not above it, so it stays.
    CHECK(hygiene_reason("ab\xce\xb1\xce\xb2").empty());
    // One more Greek letter pushes it strictly above the bound.
    CHECK(hygiene_reason("ab\xce\xb1\xce\xb2\xce\xb3") == "unicode_ratio");
}

TEST_CASE("hygiene checks run in a fixed order") {
    // A query that is both truncated and URL-bearing reports the unicode
    // check first, then completeness, then special content.
    PipelineConfig config;
    config.unicode_ratio_max = 0.0;
    SelectionDecision d =
        filter_hygiene(with_query("\xce\xb1 http://x.test \xe2\x80\xa6"), config);
    CHECK(d.reason == "unicode_ratio");
    CHECK(hygiene_reason("http://x.test \xe2\x80\xa6") == "incomplete");
}
