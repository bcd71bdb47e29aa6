#include "curator/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

namespace curator {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void expect_keys(const json& j, const std::set<std::string>& allowed,
                 const std::string& where) {
    if (!j.is_object()) fail(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
    }
}

double as_number(const json& j, const std::string& key) {
    if (!j.is_number()) fail("'" + key + "' must be a number");
    return j.get<double>();
}

std::int64_t as_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) fail("'" + key + "' must be an integer");
    return j.get<std::int64_t>();
}

bool as_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) fail("'" + key + "' must be a boolean");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& key) {
    if (!j.is_string()) fail("'" + key + "' must be a string");
    return j.get<std::string>();
}

Category as_category(const std::string& name, const std::string& where) {
    auto c = parse_category(name);
    if (!c) fail("unknown category '" + name + "' in " + where);
    return *c;
}

ProviderRef provider_from_json(const json& j, const std::string& where) {
    expect_keys(j, {"endpoint", "fixture"}, where);
    ProviderRef ref;
    if (j.contains("endpoint")) ref.endpoint = as_string(j["endpoint"], where + ".endpoint");
    if (j.contains("fixture")) ref.fixture = as_string(j["fixture"], where + ".fixture");
    return ref;
}

json provider_to_json(const ProviderRef& ref) {
    json j = json::object();
    if (!ref.endpoint.empty()) j["endpoint"] = ref.endpoint;
    if (!ref.fixture.empty()) j["fixture"] = ref.fixture;
    return j;
}

void check_unit_interval(double v, const std::string& key) {
    if (!(v >= 0.0 && v <= 1.0)) fail("'" + key + "' must lie in [0,1]");
}

}  // namespace

double PipelineConfig::cv_threshold(Category c) const {
    auto it = cv_threshold_overrides.find(c);
    if (it != cv_threshold_overrides.end()) return it->second;
    if (cv_threshold_default) return *cv_threshold_default;
    fail(std::string("no cv threshold configured for category '") +
         std::string(category_name(c)) + "'");
}

bool PipelineConfig::operator==(const PipelineConfig& other) const = default;

PipelineConfig config_from_json(const json& j) {
    static const std::set<std::string> kKeys = {
        "n_expected_responses", "pass_thresholds", "cv_threshold_default",
        "cv_threshold_overrides", "stage2_threshold_normalized", "stage2_top_k",
        "unicode_ratio_max", "semantic_sim_threshold", "ppl_threshold",
        "ngram_n", "ngram_max_count", "easy_keep_probability", "rng_seed",
        "tokenizer", "std_mode", "ppl_include_think",
        "ngram_per_response_removal", "workers", "provider_max_retries",
        "provider_timeout_ms", "provider_batch", "eval_set_path", "embedding",
        "judge", "reward", "ppl", "code", "code_commands",
        "code_time_limit_ms", "code_memory_limit_mb"};
    expect_keys(j, kKeys, "config");

    PipelineConfig c;
    if (j.contains("n_expected_responses")) {
        c.n_expected_responses = static_cast<int>(as_int(j["n_expected_responses"], "n_expected_responses"));
        if (c.n_expected_responses < 1) fail("'n_expected_responses' must be >= 1");
    }
    if (j.contains("pass_thresholds")) {
        const json& pt = j["pass_thresholds"];
        if (!pt.is_object()) fail("'pass_thresholds' must map category -> threshold");
        for (const auto& [name, value] : pt.items()) {
            Category cat = as_category(name, "pass_thresholds");
            double v = as_number(value, "pass_thresholds." + name);
            ScoreScale scale = native_scale(cat);
            if (!(v >= scale.min && v <= scale.max))
                fail("pass threshold for '" + name + "' outside native scale");
            c.pass_thresholds[static_cast<std::size_t>(cat)] = v;
        }
    }
    if (j.contains("cv_threshold_default")) {
        double v = as_number(j["cv_threshold_default"], "cv_threshold_default");
        if (!(v >= 0.0)) fail("'cv_threshold_default' must be >= 0");
        c.cv_threshold_default = v;
    }
    if (j.contains("cv_threshold_overrides")) {
        const json& ov = j["cv_threshold_overrides"];
        if (!ov.is_object()) fail("'cv_threshold_overrides' must map category -> threshold");
        for (const auto& [name, value] : ov.items()) {
            Category cat = as_category(name, "cv_threshold_overrides");
            double v = as_number(value, "cv_threshold_overrides." + name);
            if (!(v >= 0.0)) fail("cv threshold for '" + name + "' must be >= 0");
            c.cv_threshold_overrides[cat] = v;
        }
    }
    if (j.contains("stage2_threshold_normalized")) {
        c.stage2_threshold_normalized = as_number(j["stage2_threshold_normalized"], "stage2_threshold_normalized");
        check_unit_interval(c.stage2_threshold_normalized, "stage2_threshold_normalized");
    }
    if (j.contains("stage2_top_k")) {
        std::int64_t k = as_int(j["stage2_top_k"], "stage2_top_k");
        if (k < 1) fail("'stage2_top_k' must be >= 1");
        c.stage2_top_k = k;
    }
    if (j.contains("unicode_ratio_max")) {
        c.unicode_ratio_max = as_number(j["unicode_ratio_max"], "unicode_ratio_max");
        check_unit_interval(c.unicode_ratio_max, "unicode_ratio_max");
    }
    if (j.contains("semantic_sim_threshold")) {
        c.semantic_sim_threshold = as_number(j["semantic_sim_threshold"], "semantic_sim_threshold");
        if (!(c.semantic_sim_threshold >= -1.0 && c.semantic_sim_threshold <= 1.0))
            fail("'semantic_sim_threshold' must lie in [-1,1]");
    }
    if (j.contains("ppl_threshold")) {
        c.ppl_threshold = as_number(j["ppl_threshold"], "ppl_threshold");
        if (!(c.ppl_threshold > 0.0)) fail("'ppl_threshold' must be > 0");
    }
    if (j.contains("ngram_n")) {
        c.ngram_n = static_cast<int>(as_int(j["ngram_n"], "ngram_n"));
        if (c.ngram_n < 1) fail("'ngram_n' must be >= 1");
    }
    if (j.contains("ngram_max_count")) {
        std::int64_t v = as_int(j["ngram_max_count"], "ngram_max_count");
        if (v < 1) fail("'ngram_max_count' must be >= 1");
        c.ngram_max_count = static_cast<std::uint64_t>(v);
    }
    if (j.contains("easy_keep_probability")) {
        c.easy_keep_probability = as_number(j["easy_keep_probability"], "easy_keep_probability");
        check_unit_interval(c.easy_keep_probability, "easy_keep_probability");
    }
    if (j.contains("rng_seed")) {
        if (!j["rng_seed"].is_number_unsigned() && !j["rng_seed"].is_number_integer())
            fail("'rng_seed' must be an integer");
        c.rng_seed = j["rng_seed"].get<std::uint64_t>();
    }
    if (j.contains("tokenizer")) {
        std::string mode = as_string(j["tokenizer"], "tokenizer");
        if (mode == "whitespace") c.tokenizer = TokenizerMode::whitespace;
        else if (mode == "character") c.tokenizer = TokenizerMode::character;
        else fail("'tokenizer' must be 'whitespace' or 'character'");
    }
    if (j.contains("std_mode")) {
        std::string mode = as_string(j["std_mode"], "std_mode");
        if (mode == "sample") c.std_mode = StdMode::sample;
        else if (mode == "population") c.std_mode = StdMode::population;
        else fail("'std_mode' must be 'sample' or 'population'");
    }
    if (j.contains("ppl_include_think"))
        c.ppl_include_think = as_bool(j["ppl_include_think"], "ppl_include_think");
    if (j.contains("ngram_per_response_removal"))
        c.ngram_per_response_removal = as_bool(j["ngram_per_response_removal"], "ngram_per_response_removal");
    if (j.contains("workers")) {
        c.workers = static_cast<int>(as_int(j["workers"], "workers"));
        if (c.workers < 0) fail("'workers' must be >= 0");
    }
    if (j.contains("provider_max_retries")) {
        c.provider_max_retries = static_cast<int>(as_int(j["provider_max_retries"], "provider_max_retries"));
        if (c.provider_max_retries < 0) fail("'provider_max_retries' must be >= 0");
    }
    if (j.contains("provider_timeout_ms")) {
        c.provider_timeout_ms = static_cast<int>(as_int(j["provider_timeout_ms"], "provider_timeout_ms"));
        if (c.provider_timeout_ms <= 0) fail("'provider_timeout_ms' must be > 0");
    }
    if (j.contains("provider_batch")) {
        c.provider_batch = static_cast<int>(as_int(j["provider_batch"], "provider_batch"));
        if (c.provider_batch < 1) fail("'provider_batch' must be >= 1");
    }
    if (j.contains("eval_set_path"))
        c.eval_set_path = as_string(j["eval_set_path"], "eval_set_path");
    if (j.contains("embedding")) c.embedding = provider_from_json(j["embedding"], "embedding");
    if (j.contains("judge")) c.judge = provider_from_json(j["judge"], "judge");
    if (j.contains("reward")) c.reward = provider_from_json(j["reward"], "reward");
    if (j.contains("ppl")) c.ppl = provider_from_json(j["ppl"], "ppl");
    if (j.contains("code")) c.code = provider_from_json(j["code"], "code");
    if (j.contains("code_commands")) {
        const json& cc = j["code_commands"];
        if (!cc.is_object()) fail("'code_commands' must map language -> command");
        c.code_commands.clear();
        for (const auto& [lang, cmd] : cc.items())
            c.code_commands[lang] = as_string(cmd, "code_commands." + lang);
    }
    if (j.contains("code_time_limit_ms")) {
        c.code_time_limit_ms = static_cast<int>(as_int(j["code_time_limit_ms"], "code_time_limit_ms"));
        if (c.code_time_limit_ms <= 0) fail("'code_time_limit_ms' must be > 0");
    }
    if (j.contains("code_memory_limit_mb")) {
        c.code_memory_limit_mb = static_cast<int>(as_int(j["code_memory_limit_mb"], "code_memory_limit_mb"));
        if (c.code_memory_limit_mb <= 0) fail("'code_memory_limit_mb' must be > 0");
    }
    return c;
}

json config_to_json(const PipelineConfig& c) {
    json j = json::object();
    j["n_expected_responses"] = c.n_expected_responses;
    json pt = json::object();
    for (Category cat : kAllCategories)
        pt[std::string(category_name(cat))] = c.pass_threshold(cat);
    j["pass_thresholds"] = pt;
    if (c.cv_threshold_default) j["cv_threshold_default"] = *c.cv_threshold_default;
    if (!c.cv_threshold_overrides.empty()) {
        json ov = json::object();
        for (const auto& [cat, v] : c.cv_threshold_overrides)
            ov[std::string(category_name(cat))] = v;
        j["cv_threshold_overrides"] = ov;
    }
    j["stage2_threshold_normalized"] = c.stage2_threshold_normalized;
    if (c.stage2_top_k) j["stage2_top_k"] = *c.stage2_top_k;
    j["unicode_ratio_max"] = c.unicode_ratio_max;
    j["semantic_sim_threshold"] = c.semantic_sim_threshold;
    j["ppl_threshold"] = c.ppl_threshold;
    j["ngram_n"] = c.ngram_n;
    j["ngram_max_count"] = c.ngram_max_count;
    j["easy_keep_probability"] = c.easy_keep_probability;
    j["rng_seed"] = c.rng_seed;
    j["tokenizer"] = c.tokenizer == TokenizerMode::whitespace ? "whitespace" : "character";
    j["std_mode"] = c.std_mode == StdMode::sample ? "sample" : "population";
    j["ppl_include_think"] = c.ppl_include_think;
    j["ngram_per_response_removal"] = c.ngram_per_response_removal;
    j["workers"] = c.workers;
    j["provider_max_retries"] = c.provider_max_retries;
    j["provider_timeout_ms"] = c.provider_timeout_ms;
    j["provider_batch"] = c.provider_batch;
    if (!c.eval_set_path.empty()) j["eval_set_path"] = c.eval_set_path;
    if (c.embedding.configured()) j["embedding"] = provider_to_json(c.embedding);
    if (c.judge.configured()) j["judge"] = provider_to_json(c.judge);
    if (c.reward.configured()) j["reward"] = provider_to_json(c.reward);
    if (c.ppl.configured()) j["ppl"] = provider_to_json(c.ppl);
    if (c.code.configured()) j["code"] = provider_to_json(c.code);
    j["code_commands"] = c.code_commands;
    j["code_time_limit_ms"] = c.code_time_limit_ms;
    j["code_memory_limit_mb"] = c.code_memory_limit_mb;
    return j;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const PipelineConfig& config, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("cannot write " + path);
    out << config_to_json(config).dump(2) << '\n';
    if (!out) fail("write failed on " + path);
}

void resolve_fixture_paths(PipelineConfig& config, const std::string& base_dir) {
    auto rebase = [&](ProviderRef& ref) {
        if (ref.fixture.empty()) return;
        std::filesystem::path p(ref.fixture);
        if (p.is_absolute()) return;
        ref.fixture = (std::filesystem::path(base_dir) / p).string();
    };
    rebase(config.embedding);
    rebase(config.judge);
    rebase(config.reward);
    rebase(config.ppl);
    rebase(config.code);
    if (!config.eval_set_path.empty()) {
        std::filesystem::path p(config.eval_set_path);
        if (!p.is_absolute())
            config.eval_set_path = (std::filesystem::path(base_dir) / p).string();
    }
}

}  // namespace curator
