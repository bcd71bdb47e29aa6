#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/config.hpp"

namespace curator {

struct StageCounts {
    std::string name;
    std::uint64_t records_in = 0;
    std::uint64_t records_out = 0;
    std::uint64_t rows_rejected = 0;
    std::uint64_t ragged = 0;  // records whose n differs from n_expected
    std::map<std::string, std::uint64_t> discards;

    void count_discard(const std::string& reason) { ++discards[reason]; }
};

struct InputDigest {
    std::string path;
    std::string digest;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string subcommand;
    std::uint64_t seed = 0;
    json config;
    std::string config_digest;
    std::vector<InputDigest> inputs;
    std::vector<StageCounts> stages;
    std::uint64_t wall_time_ms = 0;

    void add_input(const std::string& path);
    json to_json() const;
    void save(const std::string& path) const;
};

}  // namespace curator
