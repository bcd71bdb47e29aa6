#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "curator/category.hpp"

namespace curator {

using json = nlohmann::json;

enum class TokenizerMode : std::uint8_t { whitespace, character };
enum class StdMode : std::uint8_t { sample, population };

struct ProviderRef {
    std::string endpoint;  // http://host:port/path
    std::string fixture;   // local JSONL fixture

    bool configured() const { return !endpoint.empty() || !fixture.empty(); }
    bool operator==(const ProviderRef&) const = default;
};

struct PipelineConfig {
    int n_expected_responses = 4;

    // Strict per-category pass thresholds, indexed by Category.
    std::array<double, kCategoryCount> pass_thresholds = {0.99, 0.99, 4.99,
                                                          0.99, 0.7,  0.7};

    // CV_t has no published value; the default is mandatory config and
    // per-category overrides are optional.
    std::optional<double> cv_threshold_default;
    std::map<Category, double> cv_threshold_overrides;

    double stage2_threshold_normalized = 0.99;
    std::optional<std::int64_t> stage2_top_k;

    double unicode_ratio_max = 0.5;
    double semantic_sim_threshold = 0.9;
    double ppl_threshold = 20.0;
    int ngram_n = 20;
    std::uint64_t ngram_max_count = 20;
    double easy_keep_probability = 0.5;
    std::uint64_t rng_seed = 0;
    TokenizerMode tokenizer = TokenizerMode::whitespace;
    StdMode std_mode = StdMode::sample;
    bool ppl_include_think = false;
    bool ngram_per_response_removal = false;

    int workers = 0;  // 0 = hardware concurrency
    int provider_max_retries = 3;
    int provider_timeout_ms = 10000;
    int provider_batch = 64;

    // Default eval set for decontamination; a --eval-set flag overrides it.
    std::string eval_set_path;

    ProviderRef embedding;
    ProviderRef judge;
    ProviderRef reward;
    ProviderRef ppl;
    ProviderRef code;  // fixture-only runner backend

    std::map<std::string, std::string> code_commands = {
        {"python", "python3 {src}"}};
    int code_time_limit_ms = 10000;
    int code_memory_limit_mb = 512;

    double pass_threshold(Category c) const {
        return pass_thresholds[static_cast<std::size_t>(c)];
    }

    // Throws ConfigError when no CV threshold is configured for the category.
    double cv_threshold(Category c) const;

    bool operator==(const PipelineConfig& other) const;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat-key JSON form. load_config rejects unknown keys, wrong types and
// out-of-scale thresholds; save_config(load_config(x)) is lossless.
PipelineConfig config_from_json(const json& j);
json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& config, const std::string& path);

// Rebases relative provider fixture paths onto base_dir so a config file
// works regardless of the caller's working directory.
void resolve_fixture_paths(PipelineConfig& config, const std::string& base_dir);

}  // namespace curator
