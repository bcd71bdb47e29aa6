#include "curator/providers.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <thread>
#include <unordered_map>
#include <utility>

#include <httplib.h>

#include "curator/ingest.hpp"
#include "curator/text.hpp"

namespace curator {

namespace {

// ---------------------------------------------------------------------------
// HTTP plumbing. A fresh client per request keeps calls thread-safe under
// the OpenMP stage loops; providers are I/O bound anyway.

struct Endpoint {
    std::string base;  // scheme://host:port
    std::string path;  // /route
};

Endpoint split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ProviderError("provider endpoint '" + url + "' has no scheme");
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json post_json(const Endpoint& ep, const json& body, const PipelineConfig& config,
               const std::string& what) {
    std::string payload = body.dump();
    std::string last_error;
    int attempts = config.provider_max_retries + 1;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                std::min(25 * (1 << (attempt - 1)), 400));
            std::this_thread::sleep_for(delay);
        }
        httplib::Client client(ep.base);
        client.set_connection_timeout(0, config.provider_timeout_ms * 1000);
        client.set_read_timeout(config.provider_timeout_ms / 1000,
                                (config.provider_timeout_ms % 1000) * 1000);
        client.set_write_timeout(config.provider_timeout_ms / 1000,
                                 (config.provider_timeout_ms % 1000) * 1000);
        auto res = client.Post(ep.path, payload, "application/json");
        if (!res) {
            last_error = "transport error " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            last_error = "unparseable response body";
            continue;
        }
        return parsed;
    }
    throw ProviderError(what + " failed after " + std::to_string(attempts) +
                        " attempts (" + ep.base + ep.path + "): " + last_error);
}

double number_at(const json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_number())
        throw ProviderError(what + ": response missing numeric '" + key + "'");
    return j[key].get<double>();
}

// ---------------------------------------------------------------------------
// Fixture plumbing. Each fixture is JSONL; rows are keyed by id, with
// response_index appended for per-response calls. Lookups are immutable
// after load, so the providers are safe to share across threads.

std::string response_key(const std::string& id, std::int64_t index) {
    return id + '\x1f' + std::to_string(index);
}

void for_each_fixture_row(const std::string& path,
                          const std::function<void(const json&, std::size_t)>& fn) {
    JsonlLineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (is_blank(line)) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw ProviderError(path + ":" + std::to_string(reader.line_no()) +
                                ": malformed fixture row");
        fn(row, reader.line_no());
    }
}

[[noreturn]] void missing_fixture_row(const std::string& path,
                                      const std::string& key) {
    throw ProviderError("fixture " + path + " has no row for '" + key + "'");
}

std::string require_id(const json& row, const std::string& path, std::size_t line) {
    if (!row.contains("id") || !row["id"].is_string())
        throw ProviderError(path + ":" + std::to_string(line) +
                            ": fixture row needs string id");
    return row["id"].get<std::string>();
}

std::int64_t require_index(const json& row, const std::string& path,
                           std::size_t line) {
    if (!row.contains("response_index") || !row["response_index"].is_number_integer())
        throw ProviderError(path + ":" + std::to_string(line) +
                            ": fixture row needs integer response_index");
    return row["response_index"].get<std::int64_t>();
}

// ---------------------------------------------------------------------------

class HttpEmbeddingProvider final : public EmbeddingProvider {
  public:
    HttpEmbeddingProvider(Endpoint ep, PipelineConfig config)
        : ep_(std::move(ep)), config_(std::move(config)) {}

    std::vector<std::vector<double>> embed(
        const std::vector<std::string>& ids,
        const std::vector<std::string>& texts) override {
        json body = {{"ids", ids}, {"texts", texts}};
        json res = post_json(ep_, body, config_, "embedding");
        if (!res.is_object() || !res.contains("vectors") || !res["vectors"].is_array() ||
            res["vectors"].size() != ids.size())
            throw ProviderError("embedding: response must carry one vector per id");
        std::vector<std::vector<double>> out;
        out.reserve(ids.size());
        for (const json& vec : res["vectors"]) {
            if (!vec.is_array() || vec.empty())
                throw ProviderError("embedding: empty vector in response");
            out.push_back(vec.get<std::vector<double>>());
        }
        return out;
    }

  private:
    Endpoint ep_;
    PipelineConfig config_;
};

class FixtureEmbeddingProvider final : public EmbeddingProvider {
  public:
    explicit FixtureEmbeddingProvider(const std::string& path) : path_(path) {
        for_each_fixture_row(path, [&](const json& row, std::size_t line) {
            std::string id = require_id(row, path, line);
            if (!row.contains("vector") || !row["vector"].is_array())
                throw ProviderError(path + ":" + std::to_string(line) +
                                    ": fixture row needs vector");
            vectors_[id] = row["vector"].get<std::vector<double>>();
        });
    }

    std::vector<std::vector<double>> embed(
        const std::vector<std::string>& ids,
        const std::vector<std::string>& texts) override {
        (void)texts;
        std::vector<std::vector<double>> out;
        out.reserve(ids.size());
        for (const std::string& id : ids) {
            auto it = vectors_.find(id);
            if (it == vectors_.end()) missing_fixture_row(path_, id);
            out.push_back(it->second);
        }
        return out;
    }

  private:
    std::string path_;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

class HttpJudgeProvider final : public JudgeProvider {
  public:
    HttpJudgeProvider(Endpoint ep, PipelineConfig config)
        : ep_(std::move(ep)), config_(std::move(config)) {}

    double score(const JudgeRequest& request) override {
        json body = {{"record_id", request.record_id},
                     {"response_index", request.response_index},
                     {"question", request.question},
                     {"reference", request.reference},
                     {"candidate", request.candidate},
                     {"rubric", request.rubric}};
        return number_at(post_json(ep_, body, config_, "judge"), "score", "judge");
    }

  private:
    Endpoint ep_;
    PipelineConfig config_;
};

class FixtureJudgeProvider final : public JudgeProvider {
  public:
    explicit FixtureJudgeProvider(const std::string& path) : path_(path) {
        for_each_fixture_row(path, [&](const json& row, std::size_t line) {
            std::string id = require_id(row, path, line);
            std::int64_t index = require_index(row, path, line);
            if (!row.contains("score") || !row["score"].is_number())
                throw ProviderError(path + ":" + std::to_string(line) +
                                    ": fixture row needs numeric score");
            scores_[response_key(id, index)] = row["score"].get<double>();
        });
    }

    double score(const JudgeRequest& request) override {
        auto it = scores_.find(response_key(request.record_id, request.response_index));
        if (it == scores_.end())
            missing_fixture_row(path_, response_key(request.record_id,
                                                    request.response_index));
        return it->second;
    }

  private:
    std::string path_;
    std::unordered_map<std::string, double> scores_;
};

class HttpRewardProvider final : public RewardProvider {
  public:
    HttpRewardProvider(Endpoint ep, PipelineConfig config)
        : ep_(std::move(ep)), config_(std::move(config)) {}

    RewardScores score(const std::string& record_id, std::int64_t response_index,
                       const std::vector<Turn>& turns) override {
        json turn_list = json::array();
        for (const Turn& t : turns)
            turn_list.push_back({{"role", t.assistant ? "assistant" : "user"},
                                 {"content", t.content}});
        json body = {{"record_id", record_id},
                     {"response_index", response_index},
                     {"turns", std::move(turn_list)}};
        json res = post_json(ep_, body, config_, "reward");
        RewardScores out;
        out.coherence = number_at(res, "coherence", "reward");
        out.correctness = number_at(res, "correctness", "reward");
        out.helpfulness = number_at(res, "helpfulness", "reward");
        return out;
    }

  private:
    Endpoint ep_;
    PipelineConfig config_;
};

class FixtureRewardProvider final : public RewardProvider {
  public:
    explicit FixtureRewardProvider(const std::string& path) : path_(path) {
        for_each_fixture_row(path, [&](const json& row, std::size_t line) {
            std::string id = require_id(row, path, line);
            std::int64_t index = require_index(row, path, line);
            RewardScores s;
            s.coherence = number_at(row, "coherence", path);
            s.correctness = number_at(row, "correctness", path);
            s.helpfulness = number_at(row, "helpfulness", path);
            scores_[response_key(id, index)] = s;
        });
    }

    RewardScores score(const std::string& record_id, std::int64_t response_index,
                       const std::vector<Turn>& turns) override {
        (void)turns;
        auto it = scores_.find(response_key(record_id, response_index));
        if (it == scores_.end())
            missing_fixture_row(path_, response_key(record_id, response_index));
        return it->second;
    }

  private:
    std::string path_;
    std::unordered_map<std::string, RewardScores> scores_;
};

class HttpPplProvider final : public PplProvider {
  public:
    HttpPplProvider(Endpoint ep, PipelineConfig config)
        : ep_(std::move(ep)), config_(std::move(config)) {}

    double perplexity(const std::string& record_id, const std::string& text) override {
        json body = {{"record_id", record_id}, {"text", text}};
        return number_at(post_json(ep_, body, config_, "ppl"), "ppl", "ppl");
    }

  private:
    Endpoint ep_;
    PipelineConfig config_;
};

class FixturePplProvider final : public PplProvider {
  public:
    explicit FixturePplProvider(const std::string& path) : path_(path) {
        for_each_fixture_row(path, [&](const json& row, std::size_t line) {
            std::string id = require_id(row, path, line);
            ppl_[id] = number_at(row, "ppl", path);
        });
    }

    double perplexity(const std::string& record_id, const std::string& text) override {
        (void)text;
        auto it = ppl_.find(record_id);
        if (it == ppl_.end()) missing_fixture_row(path_, record_id);
        return it->second;
    }

  private:
    std::string path_;
    std::unordered_map<std::string, double> ppl_;
};

}  // namespace

// Fixture wins over endpoint when both are set: hermetic runs stay hermetic.
std::shared_ptr<EmbeddingProvider> make_embedding_provider(
    const ProviderRef& ref, const PipelineConfig& config) {
    if (!ref.fixture.empty())
        return std::make_shared<FixtureEmbeddingProvider>(ref.fixture);
    if (!ref.endpoint.empty())
        return std::make_shared<HttpEmbeddingProvider>(split_endpoint(ref.endpoint), config);
    return nullptr;
}

std::shared_ptr<JudgeProvider> make_judge_provider(const ProviderRef& ref,
                                                   const PipelineConfig& config) {
    if (!ref.fixture.empty())
        return std::make_shared<FixtureJudgeProvider>(ref.fixture);
    if (!ref.endpoint.empty())
        return std::make_shared<HttpJudgeProvider>(split_endpoint(ref.endpoint), config);
    return nullptr;
}

std::shared_ptr<RewardProvider> make_reward_provider(const ProviderRef& ref,
                                                     const PipelineConfig& config) {
    if (!ref.fixture.empty())
        return std::make_shared<FixtureRewardProvider>(ref.fixture);
    if (!ref.endpoint.empty())
        return std::make_shared<HttpRewardProvider>(split_endpoint(ref.endpoint), config);
    return nullptr;
}

std::shared_ptr<PplProvider> make_ppl_provider(const ProviderRef& ref,
                                               const PipelineConfig& config) {
    if (!ref.fixture.empty())
        return std::make_shared<FixturePplProvider>(ref.fixture);
    if (!ref.endpoint.empty())
        return std::make_shared<HttpPplProvider>(split_endpoint(ref.endpoint), config);
    return nullptr;
}

}  // namespace curator
