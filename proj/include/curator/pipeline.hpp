#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "curator/config.hpp"
#include "curator/manifest.hpp"
#include "curator/types.hpp"

namespace curator {

// File-to-file stage drivers behind the CLI subcommands. Every driver
// streams records in input order, writes its output atomically
// (temp + rename), appends removed records to `<output>.discards.jsonl`
// and unparseable rows to `<output>.rejects.jsonl`, and returns the
// stage's funnel counts. Fatal conditions throw; partial outputs are
// cleaned up by the writers.

StageCounts stage_validate(const std::string& input,
                           const std::string& rejects_path,
                           const PipelineConfig& config);

StageCounts stage_filter(const std::string& input, const std::string& output,
                         const PipelineConfig& config, int workers);

StageCounts stage_decontam(const std::string& input, const std::string& output,
                           const std::string& eval_set_path,
                           const PipelineConfig& config, int workers,
                           bool exact_only = false);

StageCounts stage_verify(const std::string& input, const std::string& output,
                         const PipelineConfig& config, int workers);

StageCounts stage_qa(const std::string& input, const std::string& output,
                     const PipelineConfig& config, int workers);

StageCounts stage_grade(const std::string& input, const std::string& output,
                        const PipelineConfig& config, int workers);

StageCounts stage_select1(const std::string& input, const std::string& output,
                          const PipelineConfig& config, int workers);

StageCounts stage_select2(const std::string& input, const std::string& output,
                          const PipelineConfig& config, int workers,
                          std::int64_t top_k);

// Writes category_distribution.{json,csv}, pass_rate_hist.{json,csv} and,
// when a manifest is given, funnel.json into report_dir. Returns the
// human-readable rendering.
std::string stage_report(const std::string& input,
                         const std::string& manifest_path,
                         const std::string& report_dir,
                         const PipelineConfig& config);

struct PipelineResult {
    RunManifest manifest;
    std::string stage1_output;  // curated_stage1.jsonl
    std::string stage2_output;  // curated_stage2.jsonl
    std::string report_dir;
};

// filter -> decontam -> verify -> qa -> grade -> select-stage1 ->
// select-stage2, chained through intermediate files under out_dir.
PipelineResult run_pipeline(const std::string& input, const std::string& out_dir,
                            const std::string& eval_set_path,
                            const PipelineConfig& config, int workers,
                            std::int64_t top_k, bool keep_intermediate = false);

}  // namespace curator
