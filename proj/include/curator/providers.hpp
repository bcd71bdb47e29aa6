#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/config.hpp"
#include "curator/types.hpp"

namespace curator {

// Thrown when a provider keeps failing after the retry budget is spent.
// Stages treat it as fatal; a provider failure never silently retains a
// record.
struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;
    // One vector per id/text, same order, fixed dimension.
    virtual std::vector<std::vector<double>> embed(
        const std::vector<std::string>& ids,
        const std::vector<std::string>& texts) = 0;
};

struct JudgeRequest {
    std::string record_id;
    std::int64_t response_index = 0;
    std::string question;
    std::string reference;
    std::string candidate;
    std::string rubric;  // "binary_equivalence" or "science_0_5"
};

class JudgeProvider {
  public:
    virtual ~JudgeProvider() = default;
    virtual double score(const JudgeRequest& request) = 0;
};

struct RewardScores {
    double coherence = 0.0;
    double correctness = 0.0;
    double helpfulness = 0.0;
};

class RewardProvider {
  public:
    virtual ~RewardProvider() = default;
    virtual RewardScores score(const std::string& record_id,
                               std::int64_t response_index,
                               const std::vector<Turn>& turns) = 0;
};

class PplProvider {
  public:
    virtual ~PplProvider() = default;
    virtual double perplexity(const std::string& record_id,
                              const std::string& text) = 0;
};

// Factories. HTTP variants POST the wire-format JSON documented in the
// README; fixture variants read a JSONL file keyed by record id (plus
// response index where a call is per-response). A default-constructed
// ProviderRef yields nullptr.
std::shared_ptr<EmbeddingProvider> make_embedding_provider(
    const ProviderRef& ref, const PipelineConfig& config);
std::shared_ptr<JudgeProvider> make_judge_provider(const ProviderRef& ref,
                                                   const PipelineConfig& config);
std::shared_ptr<RewardProvider> make_reward_provider(const ProviderRef& ref,
                                                     const PipelineConfig& config);
std::shared_ptr<PplProvider> make_ppl_provider(const ProviderRef& ref,
                                               const PipelineConfig& config);

}  // namespace curator
