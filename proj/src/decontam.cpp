#include "curator/decontam.hpp"

#include <cmath>
#include <stdexcept>

#include "curator/ingest.hpp"
#include "curator/text.hpp"

namespace curator {

std::string normalize_for_decontam(std::string_view query) {
    return casefold_ascii(collapse_whitespace(query));
}

EvalSet load_eval_set(const std::string& path) {
    EvalSet set;
    JsonlLineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (is_blank(line)) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw FatalError(path + ":" + std::to_string(reader.line_no()) +
                             ": malformed eval row");
        EvalItem item;
        if (!row.contains("id") || !row["id"].is_string() ||
            !row.contains("query") || !row["query"].is_string())
            throw FatalError(path + ":" + std::to_string(reader.line_no()) +
                             ": eval row needs string id and query");
        item.id = row["id"].get<std::string>();
        item.query = row["query"].get<std::string>();
        if (row.contains("vector")) {
            const json& vec = row["vector"];
            if (!vec.is_array())
                throw FatalError(path + ":" + std::to_string(reader.line_no()) +
                                 ": eval vector must be an array");
            for (const json& v : vec) {
                if (!v.is_number())
                    throw FatalError(path + ":" + std::to_string(reader.line_no()) +
                                     ": eval vector must be numeric");
                item.embedding.push_back(v.get<double>());
            }
        }
        set.items.push_back(std::move(item));
    }
    return set;
}

ExactContaminationIndex::ExactContaminationIndex(const EvalSet& eval_set) {
    for (const EvalItem& item : eval_set.items)
        normalized_.insert(normalize_for_decontam(item.query));
}

bool ExactContaminationIndex::contains(const QueryRecord& record) const {
    return normalized_.count(normalize_for_decontam(query_text(record))) > 0;
}

SelectionDecision exact_decontam(const QueryRecord& record,
                                 const ExactContaminationIndex& index) {
    if (index.contains(record))
        return discard_decision("decontam", "exact_match");
    return retain_decision("decontam");
}

double cosine_similarity(const std::vector<double>& u,
                         const std::vector<double>& v) {
    if (u.size() != v.size())
        throw std::invalid_argument("cosine_similarity: dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0)
        throw std::invalid_argument("cosine_similarity: zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

SelectionDecision semantic_decontam(const QueryRecord& record,
                                    const std::vector<double>& embedding,
                                    const EvalSet& eval_set,
                                    const PipelineConfig& config) {
    (void)record;
    double best = -1.0;
    std::string best_id;
    for (const EvalItem& item : eval_set.items) {
        if (item.embedding.empty()) continue;
        double sim = cosine_similarity(embedding, item.embedding);
        if (sim > best) {
            best = sim;
            best_id = item.id;
        }
    }
    if (best > config.semantic_sim_threshold)
        return discard_decision("decontam", "semantic_match:" + best_id);
    return retain_decision("decontam");
}

}  // namespace curator
