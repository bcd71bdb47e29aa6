#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/config.hpp"
#include "curator/types.hpp"

namespace curator {

struct ReportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CategoryShare {
    Category category = Category::other;
    std::uint64_t instances = 0;
    double instance_share = 0.0;
    std::uint64_t answer_tokens = 0;
    double token_share = 0.0;
};

// Instance-level and answer-token-level shares per category. Throws on empty
// input. Streaming variant: accumulate counts then call distribution_from_counts.
std::vector<CategoryShare> category_distribution(
    const std::vector<QueryRecord>& records, const PipelineConfig& config);

struct CategoryCounts {
    std::array<std::uint64_t, kCategoryCount> instances{};
    std::array<std::uint64_t, kCategoryCount> answer_tokens{};

    void add(const QueryRecord& record, const PipelineConfig& config);
    void merge(const CategoryCounts& other);
};

std::vector<CategoryShare> distribution_from_counts(const CategoryCounts& counts);

// Per-category counts over exact pass_rate values. `expected_n` seeds the
// canonical buckets {0, 1/n, ..., 1} so empty buckets still appear.
struct PassRateHistogram {
    // category -> (pass_rate value -> count)
    std::map<Category, std::map<double, std::uint64_t>> buckets;

    void add(Category category, double rate);
    void seed_canonical(int expected_n);
    void merge(const PassRateHistogram& other);
};

PassRateHistogram pass_rate_histogram(const std::vector<QueryRecord>& records,
                                      int expected_n);

struct FunnelStage {
    std::string name;
    std::uint64_t records_in = 0;
    std::uint64_t records_out = 0;
    std::map<std::string, std::uint64_t> discards;  // reason -> count
};

// Rebuilds and checks the stage funnel from a run manifest. Throws
// ReportError on inconsistent counts.
std::vector<FunnelStage> funnel_report(const json& manifest);

json distribution_to_json(const std::vector<CategoryShare>& shares);
std::string distribution_to_csv(const std::vector<CategoryShare>& shares);
json histogram_to_json(const PassRateHistogram& hist);
std::string histogram_to_csv(const PassRateHistogram& hist);
json funnel_to_json(const std::vector<FunnelStage>& stages);

// Aligned-text renderings for the CLI.
std::string render_distribution(const std::vector<CategoryShare>& shares);
std::string render_histogram(const PassRateHistogram& hist);
std::string render_funnel(const std::vector<FunnelStage>& stages);

}  // namespace curator
