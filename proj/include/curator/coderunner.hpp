#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "curator/config.hpp"
#include "curator/types.hpp"

namespace curator {

struct CaseRun {
    bool passed = false;
    bool timed_out = false;
    int exit_code = -1;
    std::string stdout_text;
};

// Executes one extracted code submission against a list of test cases.
// Implementations must terminate every execution within the configured
// limits; a timeout is a failed case, never a hang.
class CodeRunner {
  public:
    virtual ~CodeRunner() = default;
    virtual std::vector<CaseRun> run(const std::string& record_id,
                                     std::int64_t response_index,
                                     const std::string& code,
                                     const std::string& language,
                                     const std::vector<TestCase>& cases) = 0;
};

// Runs each case in its own process under rlimits (wall-clock watchdog plus
// address-space cap). stdin/stdout per the case kind.
std::shared_ptr<CodeRunner> make_subprocess_runner(const PipelineConfig& config);

// Fixture JSONL {id, response_index, results: [bool...]} aligned with the
// selected cases; missing entries or short arrays count as failures.
std::shared_ptr<CodeRunner> make_fixture_runner(const std::string& path);

// config.code fixture if set, subprocess otherwise.
std::shared_ptr<CodeRunner> make_code_runner(const PipelineConfig& config);

// Expected-output comparison: trailing whitespace per line and trailing
// newlines are insignificant.
bool stdout_matches(std::string_view actual, std::string_view expected);

}  // namespace curator
