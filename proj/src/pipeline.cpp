#include "curator/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <unordered_set>

#include "curator/coderunner.hpp"
#include "curator/decontam.hpp"
#include "curator/filters.hpp"
#include "curator/grade.hpp"
#include "curator/hash.hpp"
#include "curator/ingest.hpp"
#include "curator/parallel.hpp"
#include "curator/providers.hpp"
#include "curator/quality.hpp"
#include "curator/report.hpp"
#include "curator/text.hpp"
#include "curator/verify.hpp"

namespace curator {

namespace {

namespace fs = std::filesystem;

// Chunk size is a constant, never a function of the worker count: chunk
// boundaries must not be able to change any output byte.
constexpr std::size_t kChunkLines = 1024;

struct Slot {
    std::string raw;
    std::size_t line_no = 0;
    std::optional<QueryRecord> record;
    std::string reject_reason;
    bool dropped = false;
    std::string out_line;
};

void parse_slots(std::vector<Slot>& slots, const PipelineConfig& config,
                 int workers) {
    parallel_for(slots.size(), workers, [&](std::size_t i) {
        Slot& s = slots[i];
        if (is_blank(s.raw)) {
            s.reject_reason = "empty_line";
            return;
        }
        json row = json::parse(s.raw, nullptr, false);
        if (row.is_discarded()) {
            s.reject_reason = "bad_json";
            return;
        }
        ParseResult parsed = record_from_json(row, config);
        if (!parsed.record) {
            s.reject_reason = parsed.reason;
            return;
        }
        s.record = std::move(*parsed.record);
    });
}

void drop_slot(Slot& s, SelectionDecision decision) {
    s.dropped = true;
    s.record->decision = std::move(decision);
}

// Shared chunked read -> parse -> ordered write skeleton. Stages interpose
// their per-record logic between next_chunk and emit_chunk; everything that
// touches a writer or a cross-record structure stays on the calling thread.
class StageDriver {
  public:
    StageDriver(std::string name, const std::string& input,
                const std::string& output, const PipelineConfig& config,
                int workers, bool track_ragged = false,
                std::string rejects_path = "")
        : config_(config), workers_(workers), track_ragged_(track_ragged),
          reader_(input) {
        counts_.name = std::move(name);
        if (!output.empty()) {
            out_ = std::make_unique<JsonlWriter>(output);
            discards_ = std::make_unique<JsonlWriter>(output + ".discards.jsonl");
            if (rejects_path.empty()) rejects_path = output + ".rejects.jsonl";
        }
        if (!rejects_path.empty())
            rejects_ = std::make_unique<JsonlWriter>(rejects_path);
    }

    bool next_chunk(std::vector<Slot>& slots) {
        slots.clear();
        std::string line;
        while (slots.size() < kChunkLines && reader_.next(line)) {
            Slot s;
            s.raw = std::move(line);
            s.line_no = reader_.line_no();
            slots.push_back(std::move(s));
        }
        if (slots.empty()) return false;
        parse_slots(slots, config_, workers_);
        for (Slot& s : slots) {
            if (!s.record) continue;
            if (!seen_ids_.insert(murmur3_128(s.record->id)).second) {
                s.record.reset();
                s.reject_reason = "duplicate_id";
                continue;
            }
            // Counted here so stage maps that prune responses cannot skew it.
            if (track_ragged_ &&
                s.record->responses.size() !=
                    static_cast<std::size_t>(config_.n_expected_responses))
                ++counts_.ragged;
        }
        return true;
    }

    void emit_chunk(std::vector<Slot>& slots) {
        parallel_for(slots.size(), workers_, [&](std::size_t i) {
            Slot& s = slots[i];
            if (s.record) s.out_line = serialize_record(*s.record);
        });
        for (Slot& s : slots) {
            if (!s.record) {
                ++counts_.rows_rejected;
                if (rejects_) {
                    json r = {{"line_no", s.line_no},
                              {"reason", s.reject_reason},
                              {"raw", s.raw}};
                    rejects_->write_line(r.dump());
                }
                continue;
            }
            ++counts_.records_in;
            if (s.dropped) {
                counts_.count_discard(s.record->decision ? s.record->decision->reason
                                                         : "discard");
                if (discards_) discards_->write_line(s.out_line);
            } else {
                ++counts_.records_out;
                if (out_) out_->write_line(s.out_line);
            }
        }
    }

    StageCounts finish() {
        if (out_) out_->commit();
        if (discards_) discards_->commit();
        if (rejects_) rejects_->commit();
        return counts_;
    }

    int workers() const { return workers_; }

  private:
    const PipelineConfig& config_;
    int workers_;
    bool track_ragged_;
    JsonlLineReader reader_;
    std::unique_ptr<JsonlWriter> out_, discards_, rejects_;
    std::unordered_set<Digest128, Digest128Hash> seen_ids_;
    StageCounts counts_;
};

// Read-only pass over a file, for stages that need a corpus-wide structure
// before they can decide anything.
void scan_chunks(const std::string& input, const PipelineConfig& config,
                 int workers, const std::function<void(std::vector<Slot>&)>& fn) {
    JsonlLineReader reader(input);
    std::vector<Slot> slots;
    std::string line;
    bool eof = false;
    while (!eof) {
        slots.clear();
        while (slots.size() < kChunkLines) {
            if (!reader.next(line)) {
                eof = true;
                break;
            }
            Slot s;
            s.raw = std::move(line);
            s.line_no = reader.line_no();
            slots.push_back(std::move(s));
        }
        if (slots.empty()) break;
        parse_slots(slots, config, workers);
        fn(slots);
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FatalError("cannot write " + path);
    out << content;
    if (!out) throw FatalError("write failed on " + path);
}

}  // namespace

StageCounts stage_validate(const std::string& input,
                           const std::string& rejects_path,
                           const PipelineConfig& config) {
    StageDriver driver("validate", input, "", config, 1, false, rejects_path);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) driver.emit_chunk(slots);
    return driver.finish();
}

StageCounts stage_filter(const std::string& input, const std::string& output,
                         const PipelineConfig& config, int workers) {
    StageDriver driver("filter", input, output, config, workers);
    DedupSet dedup;
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        // First occurrence wins, so the dedup scan must stay in input order.
        for (Slot& s : slots) {
            if (!s.record) continue;
            if (!dedup.insert_if_new(*s.record))
                drop_slot(s, discard_decision("filter", "duplicate"));
        }
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            SelectionDecision d = filter_hygiene(*s.record, config);
            if (d.verdict != Verdict::retain) drop_slot(s, std::move(d));
        });
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

StageCounts stage_decontam(const std::string& input, const std::string& output,
                           const std::string& eval_set_path,
                           const PipelineConfig& config, int workers,
                           bool exact_only) {
    EvalSet eval_set = load_eval_set(eval_set_path);
    ExactContaminationIndex exact_index(eval_set);

    std::shared_ptr<EmbeddingProvider> embedder =
        exact_only ? nullptr : make_embedding_provider(config.embedding, config);

    if (embedder) {
        // Fill in eval-side vectors that the file did not precompute.
        std::vector<std::size_t> missing;
        for (std::size_t i = 0; i < eval_set.items.size(); ++i)
            if (eval_set.items[i].embedding.empty()) missing.push_back(i);
        for (std::size_t start = 0; start < missing.size();
             start += static_cast<std::size_t>(config.provider_batch)) {
            std::size_t end = std::min(missing.size(),
                                       start + static_cast<std::size_t>(config.provider_batch));
            std::vector<std::string> ids, texts;
            for (std::size_t k = start; k < end; ++k) {
                ids.push_back(eval_set.items[missing[k]].id);
                texts.push_back(eval_set.items[missing[k]].query);
            }
            auto vectors = embedder->embed(ids, texts);
            for (std::size_t k = start; k < end; ++k)
                eval_set.items[missing[k]].embedding = std::move(vectors[k - start]);
        }
    }
    bool semantic = false;
    if (embedder)
        for (const EvalItem& item : eval_set.items)
            if (!item.embedding.empty()) semantic = true;

    StageDriver driver("decontam", input, output, config, workers);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            SelectionDecision d = exact_decontam(*s.record, exact_index);
            if (d.verdict != Verdict::retain) drop_slot(s, std::move(d));
        });
        if (semantic) {
            std::vector<std::size_t> pending;
            for (std::size_t i = 0; i < slots.size(); ++i)
                if (slots[i].record && !slots[i].dropped) pending.push_back(i);
            std::vector<std::vector<double>> vectors(pending.size());
            for (std::size_t start = 0; start < pending.size();
                 start += static_cast<std::size_t>(config.provider_batch)) {
                std::size_t end = std::min(pending.size(),
                                           start + static_cast<std::size_t>(config.provider_batch));
                std::vector<std::string> ids, texts;
                for (std::size_t k = start; k < end; ++k) {
                    ids.push_back(slots[pending[k]].record->id);
                    texts.push_back(query_text(*slots[pending[k]].record));
                }
                auto got = embedder->embed(ids, texts);
                for (std::size_t k = start; k < end; ++k)
                    vectors[k] = std::move(got[k - start]);
            }
            parallel_for(pending.size(), workers, [&](std::size_t k) {
                Slot& s = slots[pending[k]];
                SelectionDecision d =
                    semantic_decontam(*s.record, vectors[k], eval_set, config);
                if (d.verdict != Verdict::retain) drop_slot(s, std::move(d));
            });
        }
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

StageCounts stage_verify(const std::string& input, const std::string& output,
                         const PipelineConfig& config, int workers) {
    std::shared_ptr<JudgeProvider> judge = make_judge_provider(config.judge, config);
    std::shared_ptr<RewardProvider> reward = make_reward_provider(config.reward, config);
    std::shared_ptr<CodeRunner> runner = make_code_runner(config);
    VerifierSet verifiers{judge.get(), reward.get(), runner.get()};

    StageDriver driver("verify", input, output, config, workers, true);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            try {
                verify_record(*s.record, verifiers, config);
            } catch (const VerifyError& e) {
                // A missing provider is a config bug, not a data defect.
                if (ends_with(e.reason, "_unconfigured"))
                    throw FatalError("verify: " + e.reason);
                drop_slot(s, error_decision("verify", e.reason));
            }
        });
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

StageCounts stage_qa(const std::string& input, const std::string& output,
                     const PipelineConfig& config, int workers) {
    std::shared_ptr<PplProvider> ppl = make_ppl_provider(config.ppl, config);

    // Pass 1: corpus-wide window fingerprints.
    NgramIndexBuilder builder(config.ngram_n, config.tokenizer,
                              config.ngram_max_count);
    scan_chunks(input, config, workers, [&](std::vector<Slot>& slots) {
        std::vector<std::vector<Digest128>> fps(slots.size());
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            if (!slots[i].record) return;
            std::vector<Digest128> mine;
            for (const std::string& text : ngram_texts(*slots[i].record)) {
                auto part = builder.fingerprints_of(text);
                mine.insert(mine.end(), part.begin(), part.end());
            }
            fps[i] = std::move(mine);
        });
        for (const auto& f : fps) builder.add_fingerprints(f);
    });
    builder.prepare_exact_pass();

    // Pass 2: exact counts for candidate windows only.
    scan_chunks(input, config, workers, [&](std::vector<Slot>& slots) {
        for (Slot& s : slots) {
            if (!s.record) continue;
            for (const std::string& text : ngram_texts(*s.record))
                builder.add_exact_text(text);
        }
    });
    NgramIndex index = builder.finish();

    // Pass 3: decisions. Cheap local checks first, provider call last.
    StageDriver driver("qa", input, output, config, workers);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            SelectionDecision structural = structural_validate(*s.record);
            if (structural.verdict != Verdict::retain) {
                drop_slot(s, std::move(structural));
                return;
            }
            NgramVerdict verdict = ngram_filter(*s.record, index, config);
            if (verdict.decision.verdict != Verdict::retain) {
                drop_slot(s, std::move(verdict.decision));
                return;
            }
            if (config.ngram_per_response_removal) {
                for (std::size_t r = verdict.response_flagged.size(); r-- > 0;)
                    if (verdict.response_flagged[r])
                        s.record->responses.erase(
                            s.record->responses.begin() +
                            static_cast<std::ptrdiff_t>(r));
            }
            if (ppl) {
                SelectionDecision d = ppl_filter(*s.record, *ppl, config);
                if (d.verdict != Verdict::retain) drop_slot(s, std::move(d));
            }
        });
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

StageCounts stage_grade(const std::string& input, const std::string& output,
                        const PipelineConfig& config, int workers) {
    StageDriver driver("grade", input, output, config, workers, true);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            try {
                s.record->stats = grade_record(*s.record, config);
            } catch (const GradeError& e) {
                drop_slot(s, error_decision("grade", e.reason));
            }
        });
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

StageCounts stage_select1(const std::string& input, const std::string& output,
                          const PipelineConfig& config, int workers) {
    StageDriver driver("select-stage1", input, output, config, workers, true);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            Stage1Result result = stage1_select(*s.record, config);
            if (result.decision.verdict != Verdict::retain) {
                drop_slot(s, std::move(result.decision));
                return;
            }
            std::vector<Response> kept;
            kept.reserve(result.retained_responses.size());
            for (std::size_t idx : result.retained_responses)
                kept.push_back(std::move(s.record->responses[idx]));
            s.record->responses = std::move(kept);
            s.record->decision = std::move(result.decision);
        });
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

StageCounts stage_select2(const std::string& input, const std::string& output,
                          const PipelineConfig& config, int workers,
                          std::int64_t top_k) {
    // Pass 1: global ranking needs only (cv, id) pairs.
    struct Candidate {
        double cv;
        std::string id;
    };
    std::vector<Candidate> candidates;
    scan_chunks(input, config, workers, [&](std::vector<Slot>& slots) {
        for (Slot& s : slots) {
            if (!s.record) continue;
            if (stage2_eligible(*s.record, config))
                candidates.push_back({*s.record->stats->cv, s.record->id});
        }
    });
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                  if (a.cv != b.cv) return a.cv > b.cv;
                  return a.id < b.id;
              });
    std::size_t want = top_k < 0 ? candidates.size()
                                 : std::min<std::size_t>(
                                       static_cast<std::size_t>(top_k),
                                       candidates.size());
    std::unordered_set<std::string> selected;
    selected.reserve(want);
    for (std::size_t i = 0; i < want; ++i)
        selected.insert(std::move(candidates[i].id));
    candidates.clear();
    candidates.shrink_to_fit();

    // Pass 2: stamp the sampled response on the winners, in input order.
    StageDriver driver("select-stage2", input, output, config, workers, true);
    std::vector<Slot> slots;
    while (driver.next_chunk(slots)) {
        parallel_for(slots.size(), workers, [&](std::size_t i) {
            Slot& s = slots[i];
            if (!s.record || s.dropped) return;
            if (!selected.count(s.record->id)) {
                drop_slot(s, discard_decision("stage2", "not_selected"));
                return;
            }
            std::int64_t chosen = stage2_sample_response(*s.record, config);
            if (chosen < 0)
                throw FatalError("select-stage2: eligible record '" +
                                 s.record->id + "' has no passing response");
            s.record->stage2_choice = chosen;
            s.record->decision = retain_decision("stage2", "top_cv");
        });
        driver.emit_chunk(slots);
    }
    return driver.finish();
}

std::string stage_report(const std::string& input,
                         const std::string& manifest_path,
                         const std::string& report_dir,
                         const PipelineConfig& config) {
    CategoryCounts counts;
    PassRateHistogram hist;
    hist.seed_canonical(config.n_expected_responses);
    std::uint64_t records = 0;
    scan_chunks(input, config, 1, [&](std::vector<Slot>& slots) {
        for (Slot& s : slots) {
            if (!s.record) continue;
            ++records;
            counts.add(*s.record, config);
            if (!s.record->stats)
                throw ReportError("report: record '" + s.record->id +
                                  "' has no stats; grade the corpus first");
            hist.add(s.record->category, s.record->stats->pass_rate);
        }
    });
    if (records == 0) throw ReportError("report: no records in " + input);

    fs::create_directories(report_dir);
    auto shares = distribution_from_counts(counts);
    write_text_file(report_dir + "/category_distribution.json",
                    distribution_to_json(shares).dump(2) + "\n");
    write_text_file(report_dir + "/category_distribution.csv",
                    distribution_to_csv(shares));
    write_text_file(report_dir + "/pass_rate_hist.json",
                    histogram_to_json(hist).dump(2) + "\n");
    write_text_file(report_dir + "/pass_rate_hist.csv", histogram_to_csv(hist));

    std::string rendered = render_distribution(shares) + "\n" + render_histogram(hist);
    if (!manifest_path.empty()) {
        std::ifstream in(manifest_path);
        if (!in) throw FatalError("cannot open " + manifest_path);
        json manifest = json::parse(in, nullptr, false);
        if (manifest.is_discarded())
            throw FatalError("malformed manifest " + manifest_path);
        auto funnel = funnel_report(manifest);
        write_text_file(report_dir + "/funnel.json", funnel_to_json(funnel).dump(2) + "\n");
        rendered += "\n" + render_funnel(funnel);
    }
    return rendered;
}

PipelineResult run_pipeline(const std::string& input, const std::string& out_dir,
                            const std::string& eval_set_path,
                            const PipelineConfig& config, int workers,
                            std::int64_t top_k, bool keep_intermediate) {
    auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);

    RunManifest manifest;
    manifest.subcommand = "pipeline";
    manifest.seed = config.rng_seed;
    manifest.config = config_to_json(config);
    manifest.config_digest = digest_hex(murmur3_128(manifest.config.dump()));
    manifest.add_input(input);
    if (!eval_set_path.empty()) manifest.add_input(eval_set_path);

    std::string filter_out = out_dir + "/filter.jsonl";
    std::string decontam_out = out_dir + "/decontam.jsonl";
    std::string verify_out = out_dir + "/verify.jsonl";
    std::string qa_out = out_dir + "/qa.jsonl";
    std::string grade_out = out_dir + "/grade.jsonl";
    std::string stage1_out = out_dir + "/curated_stage1.jsonl";
    std::string stage2_out = out_dir + "/curated_stage2.jsonl";
    std::string report_dir = out_dir + "/reports";

    manifest.stages.push_back(stage_filter(input, filter_out, config, workers));
    if (!eval_set_path.empty()) {
        manifest.stages.push_back(
            stage_decontam(filter_out, decontam_out, eval_set_path, config, workers));
    } else {
        fs::copy_file(filter_out, decontam_out, fs::copy_options::overwrite_existing);
        StageCounts passthrough;
        passthrough.name = "decontam";
        passthrough.records_in = manifest.stages.back().records_out;
        passthrough.records_out = passthrough.records_in;
        manifest.stages.push_back(passthrough);
    }
    manifest.stages.push_back(stage_verify(decontam_out, verify_out, config, workers));
    manifest.stages.push_back(stage_qa(verify_out, qa_out, config, workers));
    manifest.stages.push_back(stage_grade(qa_out, grade_out, config, workers));
    manifest.stages.push_back(stage_select1(grade_out, stage1_out, config, workers));
    manifest.stages.push_back(
        stage_select2(stage1_out, stage2_out, config, workers, top_k));

    std::string rendered = stage_report(grade_out, "", report_dir, config);
    (void)rendered;
    auto funnel = funnel_report(manifest.to_json());
    write_text_file(report_dir + "/funnel.json",
                    funnel_to_json(funnel).dump(2) + "\n");

    if (!keep_intermediate)
        for (const std::string& f :
             {filter_out, decontam_out, verify_out, qa_out, grade_out}) {
            std::error_code ec;
            fs::remove(f, ec);
        }

    manifest.wall_time_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count());
    manifest.save(out_dir + "/run_manifest.json");

    PipelineResult result;
    result.manifest = std::move(manifest);
    result.stage1_output = stage1_out;
    result.stage2_output = stage2_out;
    result.report_dir = report_dir;
    return result;
}

}  // namespace curator
