#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "curator/config.hpp"
#include "curator/hash.hpp"
#include "curator/ingest.hpp"
#include "curator/manifest.hpp"
#include "curator/pipeline.hpp"
#include "curator/report.hpp"

namespace fs = std::filesystem;
using namespace curator;

namespace {

struct Options {
    std::string config_path;
    std::string input;
    std::string output;
    std::string eval_set;
    std::string manifest_in;  // report only
    std::string rejects;      // validate only
    std::int64_t seed = 0;
    bool seed_set = false;
    int workers = -1;
    std::int64_t top_k = 0;
    bool top_k_set = false;
    bool exact_only = false;
    bool keep_intermediate = false;

    std::string embedding_endpoint, embedding_fixture;
    std::string judge_endpoint, judge_fixture;
    std::string reward_endpoint, reward_fixture;
    std::string ppl_endpoint, ppl_fixture;
    std::string code_fixture;
};

void add_common(CLI::App* cmd, Options& opt, bool needs_output) {
    cmd->add_option("--config", opt.config_path, "pipeline config JSON")
        ->envname("CURATOR_CONFIG");
    cmd->add_option("--input", opt.input, "input JSONL")
        ->required()
        ->envname("CURATOR_INPUT");
    auto* out = cmd->add_option("--output", opt.output, "output path")
                    ->envname("CURATOR_OUTPUT");
    if (needs_output) out->required();
    cmd->add_option("--seed", opt.seed, "RNG seed override")
        ->envname("CURATOR_SEED");
    cmd->add_option("--workers", opt.workers, "worker count (0 = hardware)")
        ->envname("CURATOR_WORKERS");

    cmd->add_option("--embedding-endpoint", opt.embedding_endpoint)
        ->envname("CURATOR_EMBEDDING_ENDPOINT");
    cmd->add_option("--embedding-fixture", opt.embedding_fixture)
        ->envname("CURATOR_EMBEDDING_FIXTURE");
    cmd->add_option("--judge-endpoint", opt.judge_endpoint)
        ->envname("CURATOR_JUDGE_ENDPOINT");
    cmd->add_option("--judge-fixture", opt.judge_fixture)
        ->envname("CURATOR_JUDGE_FIXTURE");
    cmd->add_option("--reward-endpoint", opt.reward_endpoint)
        ->envname("CURATOR_REWARD_ENDPOINT");
    cmd->add_option("--reward-fixture", opt.reward_fixture)
        ->envname("CURATOR_REWARD_FIXTURE");
    cmd->add_option("--ppl-endpoint", opt.ppl_endpoint)
        ->envname("CURATOR_PPL_ENDPOINT");
    cmd->add_option("--ppl-fixture", opt.ppl_fixture)
        ->envname("CURATOR_PPL_FIXTURE");
    cmd->add_option("--code-fixture", opt.code_fixture)
        ->envname("CURATOR_CODE_FIXTURE");
}

PipelineConfig make_config(const Options& opt, const CLI::App* cmd) {
    PipelineConfig config;
    if (!opt.config_path.empty()) {
        config = load_config(opt.config_path);
        resolve_fixture_paths(config,
                              fs::path(opt.config_path).parent_path().string());
    }
    if (cmd->count("--seed")) config.rng_seed = static_cast<std::uint64_t>(opt.seed);
    if (cmd->count("--workers")) config.workers = opt.workers;

    auto override_ref = [](ProviderRef& ref, const std::string& endpoint,
                           const std::string& fixture) {
        if (!endpoint.empty() || !fixture.empty()) ref = {endpoint, fixture};
    };
    override_ref(config.embedding, opt.embedding_endpoint, opt.embedding_fixture);
    override_ref(config.judge, opt.judge_endpoint, opt.judge_fixture);
    override_ref(config.reward, opt.reward_endpoint, opt.reward_fixture);
    override_ref(config.ppl, opt.ppl_endpoint, opt.ppl_fixture);
    override_ref(config.code, "", opt.code_fixture);
    return config;
}

int effective_workers(const PipelineConfig& config) { return config.workers; }

void print_counts(const StageCounts& counts) {
    std::printf("%s: %llu in, %llu out, %llu rows rejected",
                counts.name.c_str(),
                static_cast<unsigned long long>(counts.records_in),
                static_cast<unsigned long long>(counts.records_out),
                static_cast<unsigned long long>(counts.rows_rejected));
    if (counts.ragged)
        std::printf(", %llu ragged",
                    static_cast<unsigned long long>(counts.ragged));
    std::printf("\n");
    for (const auto& [reason, n] : counts.discards)
        std::printf("  - %s: %llu\n", reason.c_str(),
                    static_cast<unsigned long long>(n));
}

void save_stage_manifest(const std::string& subcommand, const Options& opt,
                         const PipelineConfig& config, StageCounts counts,
                         std::uint64_t wall_ms) {
    RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.seed = config.rng_seed;
    manifest.config = config_to_json(config);
    manifest.config_digest = digest_hex(murmur3_128(manifest.config.dump()));
    manifest.add_input(opt.input);
    if (!opt.eval_set.empty()) manifest.add_input(opt.eval_set);
    manifest.stages.push_back(std::move(counts));
    manifest.wall_time_ms = wall_ms;
    fs::path dir = opt.output.empty() ? fs::path(".")
                                      : fs::path(opt.output).parent_path();
    if (dir.empty()) dir = ".";
    manifest.save((dir / "run_manifest.json").string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"difficulty-graded reasoning data curation pipeline"};
    app.require_subcommand(1);

    Options opt;
    auto* validate = app.add_subcommand("validate", "schema-check a corpus");
    add_common(validate, opt, false);
    validate->add_option("--rejects", opt.rejects, "rejects sidecar path");

    auto* filter = app.add_subcommand("filter", "dedup + hygiene");
    add_common(filter, opt, true);

    auto* decontam = app.add_subcommand("decontam", "eval-set decontamination");
    add_common(decontam, opt, true);
    decontam->add_option("--eval-set", opt.eval_set, "eval set JSONL")
        ->required()
        ->envname("CURATOR_EVAL_SET");
    decontam->add_flag("--exact-only", opt.exact_only,
                       "skip the semantic stage");

    auto* verify = app.add_subcommand("verify", "score responses");
    add_common(verify, opt, true);

    auto* qa = app.add_subcommand("qa", "structural, perplexity and n-gram checks");
    add_common(qa, opt, true);

    auto* grade = app.add_subcommand("grade", "difficulty statistics");
    add_common(grade, opt, true);

    auto* select1 = app.add_subcommand("select-stage1", "max-score gate + CV branch");
    add_common(select1, opt, true);

    auto* select2 = app.add_subcommand("select-stage2", "top-K annealing selection");
    add_common(select2, opt, true);
    select2->add_option("--top-k", opt.top_k, "K (negative = all eligible)")
        ->envname("CURATOR_TOP_K");

    auto* report = app.add_subcommand("report", "distribution, histogram, funnel");
    add_common(report, opt, true);
    report->add_option("--manifest", opt.manifest_in,
                       "run manifest for the funnel section");

    auto* pipeline = app.add_subcommand("pipeline", "all stages in order");
    add_common(pipeline, opt, true);
    pipeline->add_option("--eval-set", opt.eval_set, "eval set JSONL")
        ->envname("CURATOR_EVAL_SET");
    pipeline->add_option("--top-k", opt.top_k, "K (negative = all eligible)")
        ->envname("CURATOR_TOP_K");
    pipeline->add_flag("--keep-intermediate", opt.keep_intermediate,
                       "keep per-stage intermediate files");

    CLI11_PARSE(app, argc, argv);
    CLI::App* cmd = app.get_subcommands().front();

    try {
        PipelineConfig config = make_config(opt, cmd);
        if (opt.eval_set.empty()) opt.eval_set = config.eval_set_path;
        int workers = effective_workers(config);
        auto t0 = std::chrono::steady_clock::now();
        auto wall_ms = [&] {
            return static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - t0)
                    .count());
        };

        if (cmd == validate) {
            std::string rejects = !opt.rejects.empty()
                                      ? opt.rejects
                                      : opt.input + ".rejects.jsonl";
            StageCounts counts = stage_validate(opt.input, rejects, config);
            print_counts(counts);
            bool bad = counts.rows_rejected > 0;
            opt.output.clear();
            save_stage_manifest("validate", opt, config, std::move(counts), wall_ms());
            return bad ? 1 : 0;
        }

        StageCounts counts;
        if (cmd == filter) {
            counts = stage_filter(opt.input, opt.output, config, workers);
        } else if (cmd == decontam) {
            counts = stage_decontam(opt.input, opt.output, opt.eval_set, config,
                                    workers, opt.exact_only);
        } else if (cmd == verify) {
            counts = stage_verify(opt.input, opt.output, config, workers);
        } else if (cmd == qa) {
            counts = stage_qa(opt.input, opt.output, config, workers);
        } else if (cmd == grade) {
            counts = stage_grade(opt.input, opt.output, config, workers);
        } else if (cmd == select1) {
            counts = stage_select1(opt.input, opt.output, config, workers);
        } else if (cmd == select2) {
            std::int64_t k = cmd->count("--top-k")
                                 ? opt.top_k
                                 : (config.stage2_top_k ? *config.stage2_top_k : -1);
            counts = stage_select2(opt.input, opt.output, config, workers, k);
        } else if (cmd == report) {
            std::string rendered =
                stage_report(opt.input, opt.manifest_in, opt.output, config);
            std::printf("%s", rendered.c_str());
            return 0;
        } else if (cmd == pipeline) {
            std::int64_t k = cmd->count("--top-k")
                                 ? opt.top_k
                                 : (config.stage2_top_k ? *config.stage2_top_k : -1);
            PipelineResult result =
                run_pipeline(opt.input, opt.output, opt.eval_set, config, workers,
                             k, opt.keep_intermediate);
            for (const StageCounts& stage : result.manifest.stages)
                print_counts(stage);
            std::printf("stage1 output: %s\n", result.stage1_output.c_str());
            std::printf("stage2 output: %s\n", result.stage2_output.c_str());
            std::printf("reports: %s\n", result.report_dir.c_str());
            return 0;
        }

        print_counts(counts);
        save_stage_manifest(cmd->get_name(), opt, config, std::move(counts),
                            wall_ms());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
