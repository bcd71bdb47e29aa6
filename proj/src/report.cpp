#include "curator/report.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

#include "curator/text.hpp"
#include "curator/verify.hpp"

namespace curator {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string pad_right(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string pad_left(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

}  // namespace

void CategoryCounts::add(const QueryRecord& record, const PipelineConfig& config) {
    auto idx = static_cast<std::size_t>(record.category);
    ++instances[idx];
    for (const Response& r : record.responses) {
        ThinkAnswer ta = effective_think_answer(r);
        answer_tokens[idx] += count_tokens(ta.answer, config.tokenizer);
    }
}

void CategoryCounts::merge(const CategoryCounts& other) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        instances[i] += other.instances[i];
        answer_tokens[i] += other.answer_tokens[i];
    }
}

std::vector<CategoryShare> distribution_from_counts(const CategoryCounts& counts) {
    std::uint64_t total_instances = 0, total_tokens = 0;
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        total_instances += counts.instances[i];
        total_tokens += counts.answer_tokens[i];
    }
    if (total_instances == 0) throw ReportError("category_distribution: no records");

    std::vector<CategoryShare> shares;
    for (Category c : kAllCategories) {
        auto idx = static_cast<std::size_t>(c);
        if (counts.instances[idx] == 0) continue;
        CategoryShare share;
        share.category = c;
        share.instances = counts.instances[idx];
        share.instance_share = static_cast<double>(counts.instances[idx]) /
                               static_cast<double>(total_instances);
        share.answer_tokens = counts.answer_tokens[idx];
        share.token_share =
            total_tokens == 0 ? 0.0
                              : static_cast<double>(counts.answer_tokens[idx]) /
                                    static_cast<double>(total_tokens);
        shares.push_back(share);
    }
    return shares;
}

std::vector<CategoryShare> category_distribution(
    const std::vector<QueryRecord>& records, const PipelineConfig& config) {
    CategoryCounts counts;
    for (const QueryRecord& r : records) counts.add(r, config);
    return distribution_from_counts(counts);
}

void PassRateHistogram::add(Category category, double rate) {
    ++buckets[category][rate];
}

void PassRateHistogram::seed_canonical(int expected_n) {
    if (expected_n < 1) return;
    for (Category c : kAllCategories)
        for (int k = 0; k <= expected_n; ++k)
            buckets[c][static_cast<double>(k) / expected_n];  // insert zero
}

void PassRateHistogram::merge(const PassRateHistogram& other) {
    for (const auto& [category, rates] : other.buckets)
        for (const auto& [rate, count] : rates) buckets[category][rate] += count;
}

PassRateHistogram pass_rate_histogram(const std::vector<QueryRecord>& records,
                                      int expected_n) {
    PassRateHistogram hist;
    hist.seed_canonical(expected_n);
    for (const QueryRecord& r : records) {
        if (!r.stats) throw ReportError("pass_rate_histogram: record '" + r.id +
                                        "' has no stats");
        hist.add(r.category, r.stats->pass_rate);
    }
    return hist;
}

std::vector<FunnelStage> funnel_report(const json& manifest) {
    if (!manifest.is_object() || !manifest.contains("stages") ||
        !manifest["stages"].is_array())
        throw ReportError("funnel_report: manifest has no stages");

    std::vector<FunnelStage> stages;
    for (const json& s : manifest["stages"]) {
        FunnelStage stage;
        if (!s.is_object() || !s.contains("name") || !s.contains("records_in") ||
            !s.contains("records_out"))
            throw ReportError("funnel_report: malformed stage entry");
        stage.name = s["name"].get<std::string>();
        stage.records_in = s["records_in"].get<std::uint64_t>();
        stage.records_out = s["records_out"].get<std::uint64_t>();
        if (s.contains("discards"))
            for (const auto& [reason, count] : s["discards"].items())
                stage.discards[reason] = count.get<std::uint64_t>();

        std::uint64_t dropped = 0;
        for (const auto& [reason, count] : stage.discards) {
            (void)reason;
            dropped += count;
        }
        if (stage.records_out + dropped != stage.records_in)
            throw ReportError("funnel_report: stage '" + stage.name +
                              "' counts do not telescope");
        if (!stages.empty() && stages.back().records_out != stage.records_in)
            throw ReportError("funnel_report: stage '" + stage.name +
                              "' input differs from previous output");
        stages.push_back(std::move(stage));
    }
    return stages;
}

json distribution_to_json(const std::vector<CategoryShare>& shares) {
    json rows = json::array();
    for (const CategoryShare& s : shares)
        rows.push_back({{"category", std::string(category_name(s.category))},
                        {"instances", s.instances},
                        {"instance_share", s.instance_share},
                        {"answer_tokens", s.answer_tokens},
                        {"token_share", s.token_share}});
    return {{"category_distribution", rows}};
}

std::string distribution_to_csv(const std::vector<CategoryShare>& shares) {
    std::string out = "category,instances,instance_share,answer_tokens,token_share\n";
    for (const CategoryShare& s : shares) {
        out += std::string(category_name(s.category));
        out += ',' + std::to_string(s.instances);
        out += ',' + format_double(s.instance_share);
        out += ',' + std::to_string(s.answer_tokens);
        out += ',' + format_double(s.token_share);
        out += '\n';
    }
    return out;
}

json histogram_to_json(const PassRateHistogram& hist) {
    json per_category = json::object();
    for (const auto& [category, rates] : hist.buckets) {
        json row = json::array();
        for (const auto& [rate, count] : rates)
            row.push_back({{"pass_rate", rate}, {"count", count}});
        per_category[std::string(category_name(category))] = std::move(row);
    }
    return {{"pass_rate_histogram", per_category}};
}

std::string histogram_to_csv(const PassRateHistogram& hist) {
    std::string out = "category,pass_rate,count\n";
    for (const auto& [category, rates] : hist.buckets)
        for (const auto& [rate, count] : rates) {
            out += std::string(category_name(category));
            out += ',' + format_double(rate);
            out += ',' + std::to_string(count);
            out += '\n';
        }
    return out;
}

json funnel_to_json(const std::vector<FunnelStage>& stages) {
    json rows = json::array();
    for (const FunnelStage& s : stages) {
        json discards = json::object();
        for (const auto& [reason, count] : s.discards) discards[reason] = count;
        rows.push_back({{"stage", s.name},
                        {"records_in", s.records_in},
                        {"records_out", s.records_out},
                        {"discards", std::move(discards)}});
    }
    return {{"funnel", rows}};
}

std::string render_distribution(const std::vector<CategoryShare>& shares) {
    std::string out = pad_right("category", 20) + pad_left("instances", 10) +
                      pad_left("inst%", 9) + pad_left("answer_tok", 12) +
                      pad_left("tok%", 9) + "\n";
    for (const CategoryShare& s : shares) {
        char inst_pct[16], tok_pct[16];
        std::snprintf(inst_pct, sizeof inst_pct, "%.1f%%", 100.0 * s.instance_share);
        std::snprintf(tok_pct, sizeof tok_pct, "%.1f%%", 100.0 * s.token_share);
        out += pad_right(std::string(category_name(s.category)), 20);
        out += pad_left(std::to_string(s.instances), 10);
        out += pad_left(inst_pct, 9);
        out += pad_left(std::to_string(s.answer_tokens), 12);
        out += pad_left(tok_pct, 9);
        out += '\n';
    }
    return out;
}

std::string render_histogram(const PassRateHistogram& hist) {
    std::string out = pad_right("category", 20) + pad_left("pass_rate", 10) +
                      pad_left("count", 9) + "\n";
    for (const auto& [category, rates] : hist.buckets)
        for (const auto& [rate, count] : rates) {
            out += pad_right(std::string(category_name(category)), 20);
            out += pad_left(format_double(rate), 10);
            out += pad_left(std::to_string(count), 9);
            out += '\n';
        }
    return out;
}

std::string render_funnel(const std::vector<FunnelStage>& stages) {
    std::string out = pad_right("stage", 16) + pad_left("in", 10) +
                      pad_left("out", 10) + "  discards\n";
    for (const FunnelStage& s : stages) {
        out += pad_right(s.name, 16);
        out += pad_left(std::to_string(s.records_in), 10);
        out += pad_left(std::to_string(s.records_out), 10);
        out += "  ";
        bool first = true;
        for (const auto& [reason, count] : s.discards) {
            if (!first) out += ", ";
            out += reason + "=" + std::to_string(count);
            first = false;
        }
        if (first) out += "-";
        out += '\n';
    }
    return out;
}

}  // namespace curator
