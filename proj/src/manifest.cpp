#include "curator/manifest.hpp"

#include <filesystem>
#include <fstream>

#include "curator/hash.hpp"
#include "curator/ingest.hpp"

namespace curator {

void RunManifest::add_input(const std::string& path) {
    InputDigest input;
    input.path = path;
    input.digest = digest_hex(file_digest(path));
    std::error_code ec;
    auto size = std::filesystem::file_size(path, ec);
    input.bytes = ec ? 0 : static_cast<std::uint64_t>(size);
    inputs.push_back(std::move(input));
}

json RunManifest::to_json() const {
    json stage_rows = json::array();
    for (const StageCounts& s : stages) {
        json discards = json::object();
        for (const auto& [reason, count] : s.discards) discards[reason] = count;
        stage_rows.push_back({{"name", s.name},
                              {"records_in", s.records_in},
                              {"records_out", s.records_out},
                              {"rows_rejected", s.rows_rejected},
                              {"ragged", s.ragged},
                              {"discards", std::move(discards)}});
    }
    json input_rows = json::array();
    for (const InputDigest& in : inputs)
        input_rows.push_back(
            {{"path", in.path}, {"digest", in.digest}, {"bytes", in.bytes}});
    return {{"subcommand", subcommand}, {"seed", seed},
            {"config", config},         {"config_digest", config_digest},
            {"inputs", input_rows},     {"stages", stage_rows},
            {"wall_time_ms", wall_time_ms}};
}

void RunManifest::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FatalError("cannot write " + path);
    out << to_json().dump(2) << '\n';
    if (!out) throw FatalError("write failed on " + path);
}

}  // namespace curator
