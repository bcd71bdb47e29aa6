#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "curator/config.hpp"
#include "curator/types.hpp"

namespace curator {

// Deterministic synthetic corpus + provider fixtures. Everything is a pure
// function of the spec, so tests, the demo assets and the benchmarks can
// regenerate identical inputs instead of shipping large files.

struct SynthSpec {
    std::uint64_t seed = 1;
    std::size_t records = 100;
    std::size_t responses_per_record = 4;
    std::size_t eval_items = 8;
    // Fault injection, applied per record in id order.
    double duplicate_fraction = 0.04;     // exact copy of an earlier query
    double hygiene_bad_fraction = 0.04;   // blank turn or non-text junk
    double contaminated_fraction = 0.06;  // query lifted from the eval set
    double high_ppl_fraction = 0.05;      // perplexity fixture above cutoff
    // Number of records sharing a verbatim boilerplate paragraph long
    // enough to trip the repeated-window filter (0 disables).
    std::size_t boilerplate_records = 0;
};

struct SynthAssets {
    std::string corpus;             // JSONL records
    std::string eval_set;           // JSONL {id, query, vector}
    std::string judge_fixture;      // {id, response_index, score}
    std::string reward_fixture;     // {id, response_index, coherence, correctness, helpfulness}
    std::string embedding_fixture;  // {id, vector}
    std::string ppl_fixture;        // {id, ppl}
    std::string code_fixture;       // {id, response_index, results}
    std::string config_path;        // config wired to the fixtures above
};

// In-memory corpus, categories cycled per record. Responses carry no
// verification outcomes; those come from the verify stage.
std::vector<QueryRecord> synth_records(const SynthSpec& spec);

// Writes the corpus, the eval set and mutually consistent provider
// fixtures under dir (created if missing), plus a ready-to-run config.
// `base` is a template for everything but provider wiring and seed.
SynthAssets write_synth_assets(const std::string& dir, const SynthSpec& spec,
                               const PipelineConfig& base);

}  // namespace curator
