#include "curator/ingest.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <unordered_set>
#include <utility>

#include "curator/hash.hpp"
#include "curator/text.hpp"

namespace curator {

namespace {

// Validation failures carry the machine-readable reject reason.
struct Reject {
    std::string reason;
};

[[noreturn]] void reject(std::string reason) { throw Reject{std::move(reason)}; }

const json& field(const json& row, const char* name) {
    auto it = row.find(name);
    if (it == row.end()) reject(std::string("missing_field:") + name);
    return *it;
}

std::string string_field(const json& j, const std::string& where) {
    if (!j.is_string()) reject("bad_field:" + where);
    return j.get<std::string>();
}

double number_field(const json& j, const std::string& where) {
    if (!j.is_number()) reject("bad_field:" + where);
    return j.get<double>();
}

bool is_cpp_language(std::string_view language) {
    std::string l = casefold_ascii(language);
    return l == "cpp" || l == "c++" || l == "cxx" || l == "cc";
}

std::vector<Turn> parse_turns(const json& j) {
    if (!j.is_array()) reject("bad_field:turns");
    std::vector<Turn> turns;
    turns.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& t = j[i];
        std::string at = "turns[" + std::to_string(i) + "]";
        if (!t.is_object()) reject("bad_field:" + at);
        std::string role = string_field(field(t, "role"), at + ".role");
        Turn turn;
        if (role == "user") turn.assistant = false;
        else if (role == "assistant") turn.assistant = true;
        else reject("bad_field:" + at + ".role");
        turn.content = string_field(field(t, "content"), at + ".content");
        turns.push_back(std::move(turn));
    }
    if (turns.empty()) reject("empty_turns");
    return turns;
}

GroundTruth parse_ground_truth(const json& j, Category category,
                               bool present) {
    bool needs_truth = category != Category::multiturn && category != Category::other;
    if (!present || j.is_null()) {
        if (needs_truth) reject("empty_ground_truth");
        return std::monostate{};
    }
    if (!j.is_object()) reject("bad_field:ground_truth");

    if (j.contains("answer")) {
        if (category == Category::code || category == Category::instruction_follow)
            reject("ground_truth_mismatch");
        AnswerTruth truth;
        truth.answer = string_field(j["answer"], "ground_truth.answer");
        if (is_blank(truth.answer)) reject("empty_ground_truth");
        return truth;
    }
    if (j.contains("test_cases")) {
        if (category != Category::code) reject("ground_truth_mismatch");
        const json& cases = j["test_cases"];
        if (!cases.is_array()) reject("bad_field:ground_truth.test_cases");
        CodeTruth truth;
        if (j.contains("language"))
            truth.language = string_field(j["language"], "ground_truth.language");
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const json& c = cases[i];
            std::string at = "ground_truth.test_cases[" + std::to_string(i) + "]";
            if (!c.is_object()) reject("bad_field:" + at);
            TestCase tc;
            std::string kind = string_field(field(c, "kind"), at + ".kind");
            if (kind == "stdin_stdout") tc.kind = TestCaseKind::stdin_stdout;
            else if (kind == "assertion") tc.kind = TestCaseKind::assertion;
            else reject("bad_field:" + at + ".kind");
            tc.input = string_field(field(c, "input"), at + ".input");
            if (c.contains("expected_output"))
                tc.expected_output =
                    string_field(c["expected_output"], at + ".expected_output");
            if (tc.kind == TestCaseKind::assertion && !tc.expected_output.empty())
                reject("bad_field:" + at + ".expected_output");
            if (c.contains("source_rank")) {
                const json& r = c["source_rank"];
                if (!r.is_number_integer() || r.get<std::int64_t>() < 0)
                    reject("bad_field:" + at + ".source_rank");
                tc.source_rank = r.get<std::int64_t>();
            } else {
                tc.source_rank = static_cast<std::int64_t>(i);
            }
            // Compiled-language corpora carry stdin/stdout cases only;
            // inline assertions are a script-language convention here.
            if (tc.kind == TestCaseKind::assertion && is_cpp_language(truth.language))
                reject("cpp_assertion_cases");
            truth.test_cases.push_back(std::move(tc));
        }
        if (truth.test_cases.empty()) reject("empty_ground_truth");
        return truth;
    }
    if (j.contains("constraints")) {
        if (category != Category::instruction_follow) reject("ground_truth_mismatch");
        const json& cons = j["constraints"];
        if (!cons.is_array()) reject("bad_field:ground_truth.constraints");
        ConstraintTruth truth;
        for (std::size_t i = 0; i < cons.size(); ++i) {
            const json& c = cons[i];
            std::string at = "ground_truth.constraints[" + std::to_string(i) + "]";
            if (!c.is_object()) reject("bad_field:" + at);
            Constraint constraint;
            constraint.kind = string_field(field(c, "kind"), at + ".kind");
            if (c.contains("params")) {
                if (!c["params"].is_object()) reject("bad_field:" + at + ".params");
                constraint.params = c["params"];
            }
            truth.constraints.push_back(std::move(constraint));
        }
        if (truth.constraints.empty()) reject("empty_ground_truth");
        return truth;
    }
    reject(needs_truth ? "empty_ground_truth" : "bad_field:ground_truth");
}

VerifyOutcome parse_outcome(const json& j, Category category,
                            const PipelineConfig& config,
                            const std::string& at) {
    if (!j.is_object()) reject("bad_field:" + at);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "score" && key != "pass" && key != "detail")
            reject("unknown_field:" + at + "." + key);
    }
    double score = number_field(field(j, "score"), at + ".score");
    ScoreScale scale = native_scale(category);
    if (!(score >= scale.min && score <= scale.max)) reject("bad_score_range");
    const json& pass = field(j, "pass");
    if (!pass.is_boolean()) reject("bad_field:" + at + ".pass");
    VerifyOutcome out;
    out.score = score;
    out.pass = pass.get<bool>();
    if (out.pass != (score > config.pass_threshold(category)))
        reject("outcome_inconsistent");
    if (j.contains("detail")) {
        if (!j["detail"].is_object()) reject("bad_field:" + at + ".detail");
        out.detail = j["detail"];
    }
    return out;
}

std::vector<Response> parse_responses(const json& j, Category category,
                                      const PipelineConfig& config) {
    if (!j.is_array()) reject("bad_field:responses");
    std::vector<Response> responses;
    responses.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& r = j[i];
        std::string at = "responses[" + std::to_string(i) + "]";
        if (!r.is_object()) reject("bad_field:" + at);
        Response resp;
        if (r.contains("model")) resp.model = string_field(r["model"], at + ".model");
        if (r.contains("think")) resp.think = string_field(r["think"], at + ".think");
        resp.answer = string_field(field(r, "answer"), at + ".answer");
        if (r.contains("outcome") && !r["outcome"].is_null())
            resp.outcome = parse_outcome(r["outcome"], category, config, at + ".outcome");
        responses.push_back(std::move(resp));
    }
    return responses;
}

DifficultyStats parse_stats(const json& j) {
    if (!j.is_object()) reject("bad_field:stats");
    DifficultyStats st;
    st.max_score = number_field(field(j, "max_score"), "stats.max_score");
    st.mean = number_field(field(j, "mean"), "stats.mean");
    st.pass_rate = number_field(field(j, "pass_rate"), "stats.pass_rate");
    if (j.contains("std_dev")) st.std_dev = number_field(j["std_dev"], "stats.std_dev");
    if (j.contains("cv")) st.cv = number_field(j["cv"], "stats.cv");
    return st;
}

SelectionDecision parse_decision(const json& j) {
    if (!j.is_object()) reject("bad_field:decision");
    SelectionDecision d;
    std::string verdict = string_field(field(j, "verdict"), "decision.verdict");
    if (verdict == "retain") d.verdict = Verdict::retain;
    else if (verdict == "discard") d.verdict = Verdict::discard;
    else if (verdict == "error") d.verdict = Verdict::error;
    else reject("bad_field:decision.verdict");
    d.stage = string_field(field(j, "stage"), "decision.stage");
    if (j.contains("reason")) d.reason = string_field(j["reason"], "decision.reason");
    return d;
}

}  // namespace

ParseResult record_from_json(const json& row, const PipelineConfig& config) {
    try {
        if (!row.is_object()) reject("not_object");
        static const std::unordered_set<std::string> kKeys = {
            "id",        "source", "category", "turns",    "ground_truth",
            "responses", "stats",  "decision", "stage2_choice"};
        for (const auto& [key, value] : row.items()) {
            (void)value;
            if (!kKeys.count(key)) reject("unknown_field:" + key);
        }

        QueryRecord rec;
        rec.id = string_field(field(row, "id"), "id");
        if (rec.id.empty()) reject("empty_id");
        if (row.contains("source"))
            rec.source = string_field(row["source"], "source");

        std::string cat = string_field(field(row, "category"), "category");
        auto parsed = parse_category(cat);
        if (!parsed) reject("unknown_category");
        rec.category = *parsed;

        rec.turns = parse_turns(field(row, "turns"));
        rec.ground_truth = parse_ground_truth(
            row.contains("ground_truth") ? row["ground_truth"] : json(),
            rec.category, row.contains("ground_truth"));
        rec.responses = parse_responses(field(row, "responses"), rec.category, config);

        if (row.contains("stats")) rec.stats = parse_stats(row["stats"]);
        if (row.contains("decision")) rec.decision = parse_decision(row["decision"]);
        if (row.contains("stage2_choice")) {
            const json& sc = row["stage2_choice"];
            if (!sc.is_number_integer()) reject("bad_field:stage2_choice");
            std::int64_t idx = sc.get<std::int64_t>();
            if (idx < 0 || idx >= static_cast<std::int64_t>(rec.responses.size()))
                reject("bad_field:stage2_choice");
            rec.stage2_choice = idx;
        }
        return {std::move(rec), ""};
    } catch (const Reject& r) {
        return {std::nullopt, r.reason};
    }
}

json record_to_json(const QueryRecord& record) {
    json row = json::object();
    row["id"] = record.id;
    row["source"] = record.source;
    row["category"] = std::string(category_name(record.category));

    json turns = json::array();
    for (const Turn& t : record.turns)
        turns.push_back({{"role", t.assistant ? "assistant" : "user"},
                         {"content", t.content}});
    row["turns"] = std::move(turns);

    if (const auto* answer = std::get_if<AnswerTruth>(&record.ground_truth)) {
        row["ground_truth"] = {{"answer", answer->answer}};
    } else if (const auto* code = std::get_if<CodeTruth>(&record.ground_truth)) {
        json cases = json::array();
        for (const TestCase& tc : code->test_cases) {
            json c = json::object();
            c["kind"] = tc.kind == TestCaseKind::assertion ? "assertion" : "stdin_stdout";
            c["input"] = tc.input;
            if (!tc.expected_output.empty()) c["expected_output"] = tc.expected_output;
            c["source_rank"] = tc.source_rank;
            cases.push_back(std::move(c));
        }
        row["ground_truth"] = {{"test_cases", std::move(cases)},
                               {"language", code->language}};
    } else if (const auto* cons = std::get_if<ConstraintTruth>(&record.ground_truth)) {
        json list = json::array();
        for (const Constraint& c : cons->constraints) {
            json one = json::object();
            one["kind"] = c.kind;
            if (!c.params.empty()) one["params"] = c.params;
            list.push_back(std::move(one));
        }
        row["ground_truth"] = {{"constraints", std::move(list)}};
    }

    json responses = json::array();
    for (const Response& r : record.responses) {
        json one = json::object();
        if (!r.model.empty()) one["model"] = r.model;
        if (!r.think.empty()) one["think"] = r.think;
        one["answer"] = r.answer;
        if (r.outcome) {
            json oc = json::object();
            oc["score"] = r.outcome->score;
            oc["pass"] = r.outcome->pass;
            if (!r.outcome->detail.empty()) oc["detail"] = r.outcome->detail;
            one["outcome"] = std::move(oc);
        }
        responses.push_back(std::move(one));
    }
    row["responses"] = std::move(responses);

    if (record.stats) {
        json st = json::object();
        st["max_score"] = record.stats->max_score;
        st["mean"] = record.stats->mean;
        if (record.stats->std_dev) st["std_dev"] = *record.stats->std_dev;
        if (record.stats->cv) st["cv"] = *record.stats->cv;
        st["pass_rate"] = record.stats->pass_rate;
        row["stats"] = std::move(st);
    }
    if (record.decision) {
        json d = json::object();
        switch (record.decision->verdict) {
            case Verdict::retain: d["verdict"] = "retain"; break;
            case Verdict::discard: d["verdict"] = "discard"; break;
            case Verdict::error: d["verdict"] = "error"; break;
        }
        if (!record.decision->reason.empty()) d["reason"] = record.decision->reason;
        d["stage"] = record.decision->stage;
        row["decision"] = std::move(d);
    }
    if (record.stage2_choice) row["stage2_choice"] = *record.stage2_choice;
    return row;
}

std::string serialize_record(const QueryRecord& record) {
    return record_to_json(record).dump();
}

IngestReport load_records(const std::string& path, const PipelineConfig& config,
                          const std::function<void(QueryRecord&&)>& sink,
                          const std::string& rejects_path) {
    JsonlLineReader reader(path);
    std::unique_ptr<JsonlWriter> rejects;
    if (!rejects_path.empty()) rejects = std::make_unique<JsonlWriter>(rejects_path);

    IngestReport report;
    std::unordered_set<Digest128, Digest128Hash> seen_ids;
    std::string line;

    auto reject_row = [&](std::size_t line_no, const std::string& reason,
                          const std::string& raw) {
        ++report.rows_rejected;
        report.rejects.push_back({line_no, reason});
        if (rejects) {
            json r = {{"line_no", line_no}, {"reason", reason}, {"raw", raw}};
            rejects->write_line(r.dump());
        }
    };

    while (reader.next(line)) {
        ++report.rows_read;
        if (is_blank(line)) {
            reject_row(reader.line_no(), "empty_line", line);
            continue;
        }
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded()) {
            reject_row(reader.line_no(), "bad_json", line);
            continue;
        }
        ParseResult parsed = record_from_json(row, config);
        if (!parsed.record) {
            reject_row(reader.line_no(), parsed.reason, line);
            continue;
        }
        if (!seen_ids.insert(murmur3_128(parsed.record->id)).second) {
            reject_row(reader.line_no(), "duplicate_id", line);
            continue;
        }
        ++report.rows_accepted;
        sink(std::move(*parsed.record));
    }
    if (rejects) rejects->commit();
    return report;
}

// ---------------------------------------------------------------------------

struct JsonlLineReader::Impl {
    std::ifstream in;
};

JsonlLineReader::JsonlLineReader(const std::string& path) : impl_(new Impl) {
    impl_->in.open(path, std::ios::binary);
    if (!impl_->in) {
        delete impl_;
        throw FatalError("cannot open " + path);
    }
}

JsonlLineReader::~JsonlLineReader() { delete impl_; }

bool JsonlLineReader::next(std::string& line) {
    if (!std::getline(impl_->in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no_;
    return true;
}

struct JsonlWriter::Impl {
    std::ofstream out;
    std::string tmp;
};

JsonlWriter::JsonlWriter(const std::string& path) : impl_(new Impl), path_(path) {
    impl_->tmp = path + ".tmp";
    impl_->out.open(impl_->tmp, std::ios::binary | std::ios::trunc);
    if (!impl_->out) {
        std::string tmp = impl_->tmp;
        delete impl_;
        throw FatalError("cannot open " + tmp + " for writing");
    }
}

JsonlWriter::~JsonlWriter() {
    if (!committed_) {
        impl_->out.close();
        std::error_code ec;
        std::filesystem::remove(impl_->tmp, ec);
    }
    delete impl_;
}

void JsonlWriter::write_line(std::string_view line) {
    impl_->out.write(line.data(), static_cast<std::streamsize>(line.size()));
    impl_->out.put('\n');
    if (!impl_->out) throw FatalError("write failed on " + impl_->tmp);
    ++lines_;
}

void JsonlWriter::commit() {
    impl_->out.flush();
    if (!impl_->out) throw FatalError("flush failed on " + impl_->tmp);
    impl_->out.close();
    std::error_code ec;
    std::filesystem::rename(impl_->tmp, path_, ec);
    if (ec) throw FatalError("rename " + impl_->tmp + " -> " + path_ + ": " + ec.message());
    committed_ = true;
}

std::uint64_t write_records(const std::vector<QueryRecord>& records,
                            const std::string& path) {
    JsonlWriter writer(path);
    for (const QueryRecord& r : records) writer.write_line(serialize_record(r));
    writer.commit();
    return writer.lines_written();
}

}  // namespace curator
