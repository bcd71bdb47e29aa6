#pragma once

// Shared fixtures for the unit tests: scratch directories and compact record
// builders. Kept header-only; nothing here belongs in the library.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "curator/config.hpp"
#include "curator/types.hpp"

namespace testutil {

inline std::string unique_suffix() {
    static std::atomic<unsigned> counter{0};
    static const unsigned run = std::random_device{}();
    return std::to_string(run) + "_" + std::to_string(counter.fetch_add(1));
}

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("curator_test_" + unique_suffix());
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

// A valid record with one user turn and scored responses. Ground truth is
// chosen to satisfy the category's schema.
inline curator::QueryRecord make_record(const std::string& id,
                                        curator::Category category,
                                        const std::vector<double>& scores,
                                        const curator::PipelineConfig& config) {
    curator::QueryRecord rec;
    rec.id = id;
    rec.source = "test";
    rec.category = category;
    rec.turns.push_back({false, "question for " + id});
    switch (category) {
        case curator::Category::code: {
            curator::CodeTruth truth;
            truth.test_cases.push_back(
                {curator::TestCaseKind::assertion, "assert True", "", 0});
            rec.ground_truth = truth;
            break;
        }
        case curator::Category::instruction_follow: {
            curator::ConstraintTruth truth;
            truth.constraints.push_back({"min_words", {{"count", 1}}});
            rec.ground_truth = truth;
            break;
        }
        case curator::Category::multiturn:
        case curator::Category::other:
            break;
        default:
            rec.ground_truth = curator::AnswerTruth{"42"};
    }
    double threshold = config.pass_threshold(category);
    curator::ScoreScale scale = curator::native_scale(category);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        curator::Response r;
        r.think = "thinking about " + id;
        r.answer = "answer " + std::to_string(i) + " for " + id;
        r.outcome = curator::make_outcome(scores[i], threshold, scale);
        rec.responses.push_back(std::move(r));
    }
    return rec;
}

}  // namespace testutil
