// Regenerates the committed demo corpus + fixtures, and optionally the
// golden outputs the acceptance suite compares against. Usage:
//   demo_gen <dir> [records] [seed] [boilerplate_records] [--golden <dir>]
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "curator/config.hpp"
#include "curator/hash.hpp"
#include "curator/pipeline.hpp"
#include "curator/synth.hpp"

namespace fs = std::filesystem;

namespace {

// Runs the pipeline over the freshly generated assets and freezes the final
// output digests plus the report files under golden_dir.
void write_golden(const curator::SynthAssets& assets,
                  const std::string& golden_dir) {
    curator::PipelineConfig config = curator::load_config(assets.config_path);
    curator::resolve_fixture_paths(
        config, fs::path(assets.config_path).parent_path().string());
    std::int64_t top_k = config.stage2_top_k ? *config.stage2_top_k : -1;

    fs::path scratch = fs::path(golden_dir) / ".run";
    curator::PipelineResult run =
        curator::run_pipeline(assets.corpus, scratch.string(),
                              config.eval_set_path, config, 1, top_k, false);

    fs::create_directories(fs::path(golden_dir) / "reports");
    nlohmann::json digests = {
        {"stage1", curator::digest_hex(curator::file_digest(run.stage1_output))},
        {"stage2", curator::digest_hex(curator::file_digest(run.stage2_output))},
    };
    std::ofstream out(fs::path(golden_dir) / "digests.json");
    out << digests.dump(2) << "\n";
    out.close();

    for (const char* name :
         {"category_distribution.csv", "pass_rate_hist.csv", "funnel.json"})
        fs::copy_file(fs::path(run.report_dir) / name,
                      fs::path(golden_dir) / "reports" / name,
                      fs::copy_options::overwrite_existing);
    fs::remove_all(scratch);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr,
                     "usage: demo_gen <dir> [records] [seed] [boilerplate] "
                     "[--golden <dir>]\n");
        return 2;
    }
    std::string golden_dir;
    curator::SynthSpec spec;
    spec.records = 100;
    spec.seed = 1;
    spec.boilerplate_records = 25;
    int positional = 0;
    for (int i = 2; i < argc; ++i) {
        if (std::strcmp(argv[i], "--golden") == 0 && i + 1 < argc) {
            golden_dir = argv[++i];
            continue;
        }
        switch (positional++) {
            case 0: spec.records = std::strtoull(argv[i], nullptr, 10); break;
            case 1: spec.seed = std::strtoull(argv[i], nullptr, 10); break;
            case 2:
                spec.boilerplate_records = std::strtoull(argv[i], nullptr, 10);
                break;
            default:
                std::fprintf(stderr, "error: unexpected argument %s\n", argv[i]);
                return 2;
        }
    }

    curator::PipelineConfig base;
    base.cv_threshold_default = 1.0;
    try {
        curator::SynthAssets assets =
            curator::write_synth_assets(argv[1], spec, base);
        std::printf("corpus: %s\nconfig: %s\n", assets.corpus.c_str(),
                    assets.config_path.c_str());
        if (!golden_dir.empty()) {
            write_golden(assets, golden_dir);
            std::printf("golden: %s\n", golden_dir.c_str());
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
