#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "curator/config.hpp"
#include "curator/providers.hpp"
#include "curator/types.hpp"

namespace curator {

// Exact-match normalization: trim, collapse whitespace, casefold.
std::string normalize_for_decontam(std::string_view query);

// Eval set file: JSONL {id, query, vector?}. Throws FatalError on bad rows.
EvalSet load_eval_set(const std::string& path);

// Precomputed lookup for the exact stage.
class ExactContaminationIndex {
  public:
    explicit ExactContaminationIndex(const EvalSet& eval_set);
    bool contains(const QueryRecord& record) const;

  private:
    std::unordered_set<std::string> normalized_;
};

SelectionDecision exact_decontam(const QueryRecord& record,
                                 const ExactContaminationIndex& index);

// Throws std::invalid_argument on dimension mismatch or zero vector.
double cosine_similarity(const std::vector<double>& u,
                         const std::vector<double>& v);

// Max cosine similarity of `embedding` against all eval items that carry
// embeddings; discard iff strictly above the configured threshold.
SelectionDecision semantic_decontam(const QueryRecord& record,
                                    const std::vector<double>& embedding,
                                    const EvalSet& eval_set,
                                    const PipelineConfig& config);

}  // namespace curator
