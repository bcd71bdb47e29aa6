#include "curator/coderunner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "curator/providers.hpp"
#include "curator/text.hpp"

namespace curator {

bool stdout_matches(std::string_view actual, std::string_view expected) {
    auto next_line = [](std::string_view& rest, std::string_view& line) {
        if (rest.empty()) return false;
        std::size_t nl = rest.find('\n');
        if (nl == std::string_view::npos) {
            line = rest;
            rest = {};
        } else {
            line = rest.substr(0, nl);
            rest = rest.substr(nl + 1);
        }
        while (!line.empty() &&
               (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.remove_suffix(1);
        return true;
    };

    std::vector<std::string_view> a, b;
    std::string_view line;
    for (std::string_view rest = actual; next_line(rest, line);) a.push_back(line);
    for (std::string_view rest = expected; next_line(rest, line);) b.push_back(line);
    while (!a.empty() && a.back().empty()) a.pop_back();
    while (!b.empty() && b.back().empty()) b.pop_back();
    return a == b;
}

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

constexpr std::size_t kStdoutCap = 4u << 20;

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string substitute_src(const std::string& command, const std::string& src) {
    std::string out;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = command.find("{src}", pos);
        if (hit == std::string::npos) {
            out += command.substr(pos);
            return out;
        }
        out += command.substr(pos, hit - pos);
        out += src;
        pos = hit + 5;
    }
}

int remaining_ms(clock_type::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                    deadline - clock_type::now())
                    .count();
    if (left < 0) return 0;
    return static_cast<int>(left);
}

// One subprocess per test case: write stdin, collect stdout, enforce a
// wall-clock deadline, and kill the whole process group on overrun so
// grandchildren cannot outlive the case.
CaseRun run_one(const std::string& command, const std::string& stdin_text,
                int time_limit_ms, int memory_limit_mb) {
    CaseRun result;

    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) return result;
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        return result;
    }

    pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
        return result;
    }

    if (pid == 0) {
        // Child. Only async-signal-safe calls until exec.
        setsid();
        rlimit mem{};
        mem.rlim_cur = mem.rlim_max =
            static_cast<rlim_t>(memory_limit_mb) * 1024 * 1024;
        setrlimit(RLIMIT_AS, &mem);
        rlimit cpu{};
        cpu.rlim_cur = cpu.rlim_max =
            static_cast<rlim_t>(time_limit_ms / 1000 + 2);
        setrlimit(RLIMIT_CPU, &cpu);

        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        int devnull = open("/dev/null", O_WRONLY);
        if (devnull >= 0) dup2(devnull, STDERR_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);

        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    close(in_pipe[0]);
    close(out_pipe[1]);
    int stdin_fd = in_pipe[1];
    int stdout_fd = out_pipe[0];
    fcntl(stdin_fd, F_SETFL, O_NONBLOCK);
    fcntl(stdout_fd, F_SETFL, O_NONBLOCK);

    auto deadline = clock_type::now() + std::chrono::milliseconds(time_limit_ms);
    std::size_t written = 0;
    bool stdin_open = true;
    bool stdout_open = true;
    bool overflow = false;
    if (stdin_text.empty()) {
        close(stdin_fd);
        stdin_open = false;
    }

    // Interleave the stdin write with the stdout read; a one-directional
    // loop deadlocks once both pipe buffers fill.
    while (stdout_open || stdin_open) {
        pollfd fds[2];
        nfds_t nfds = 0;
        int stdin_slot = -1, stdout_slot = -1;
        if (stdin_open) {
            stdin_slot = static_cast<int>(nfds);
            fds[nfds++] = {stdin_fd, POLLOUT, 0};
        }
        if (stdout_open) {
            stdout_slot = static_cast<int>(nfds);
            fds[nfds++] = {stdout_fd, POLLIN, 0};
        }
        int left = remaining_ms(deadline);
        int rc = poll(fds, nfds, left > 0 ? left : 0);
        if (rc < 0 && errno == EINTR) continue;
        if (rc <= 0) {
            result.timed_out = true;
            break;
        }
        if (stdin_slot >= 0 && (fds[stdin_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
            ssize_t n = write(stdin_fd, stdin_text.data() + written,
                              stdin_text.size() - written);
            if (n > 0) written += static_cast<std::size_t>(n);
            if ((n < 0 && errno != EAGAIN && errno != EINTR) ||
                written == stdin_text.size()) {
                close(stdin_fd);
                stdin_open = false;
            }
        }
        if (stdout_slot >= 0 && (fds[stdout_slot].revents & (POLLIN | POLLERR | POLLHUP))) {
            char buf[1 << 16];
            ssize_t n = read(stdout_fd, buf, sizeof buf);
            if (n > 0) {
                if (result.stdout_text.size() < kStdoutCap)
                    result.stdout_text.append(
                        buf, std::min<std::size_t>(static_cast<std::size_t>(n),
                                                   kStdoutCap - result.stdout_text.size()));
                else
                    overflow = true;
            } else if (n == 0 || (n < 0 && errno != EAGAIN && errno != EINTR)) {
                close(stdout_fd);
                stdout_open = false;
            }
        }
    }
    if (stdin_open) close(stdin_fd);
    if (stdout_open) close(stdout_fd);

    // Reap within the remaining budget; then escalate to a group kill.
    int status = 0;
    bool reaped = false;
    while (!reaped) {
        pid_t got = waitpid(pid, &status, WNOHANG);
        if (got == pid) {
            reaped = true;
            break;
        }
        if (got < 0) break;
        if (clock_type::now() >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            reaped = true;
            break;
        }
        usleep(2000);
    }
    kill(-pid, SIGKILL);  // sweep stragglers in the group, if any

    if (result.timed_out) {
        result.exit_code = -1;
        result.passed = false;
        return result;
    }
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
    else result.exit_code = -1;
    if (overflow) result.exit_code = result.exit_code == 0 ? -2 : result.exit_code;
    return result;
}

class SubprocessRunner final : public CodeRunner {
  public:
    explicit SubprocessRunner(PipelineConfig config) : config_(std::move(config)) {
        ignore_sigpipe_once();
    }

    std::vector<CaseRun> run(const std::string& record_id,
                             std::int64_t response_index, const std::string& code,
                             const std::string& language,
                             const std::vector<TestCase>& cases) override {
        (void)record_id;
        (void)response_index;
        auto cmd_it = config_.code_commands.find(language);
        if (cmd_it == config_.code_commands.end())
            throw std::invalid_argument("no code command for language '" + language + "'");

        std::vector<CaseRun> runs;
        runs.reserve(cases.size());
        for (const TestCase& tc : cases) {
            std::string source = code;
            if (tc.kind == TestCaseKind::assertion) {
                // Assertion cases append their checks to the submission and
                // pass on exit code 0.
                source += "\n";
                source += tc.input;
                source += "\n";
            }
            fs::path src = write_source(source, language);
            std::string command = substitute_src(cmd_it->second, src.string());
            const std::string& stdin_text =
                tc.kind == TestCaseKind::stdin_stdout ? tc.input : std::string();
            CaseRun one = run_one(command, stdin_text, config_.code_time_limit_ms,
                                  config_.code_memory_limit_mb);
            one.passed = !one.timed_out && one.exit_code == 0 &&
                         (tc.kind == TestCaseKind::assertion ||
                          stdout_matches(one.stdout_text, tc.expected_output));
            std::error_code ec;
            fs::remove(src, ec);
            runs.push_back(std::move(one));
        }
        return runs;
    }

  private:
    static fs::path write_source(const std::string& source,
                                 const std::string& language) {
        static std::atomic<std::uint64_t> counter{0};
        std::string ext = language == "python" ? ".py" : ".src";
        fs::path path = fs::temp_directory_path() /
                        ("curator_case_" + std::to_string(getpid()) + "_" +
                         std::to_string(counter.fetch_add(1)) + ext);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << source;
        out.close();
        if (!out) throw std::runtime_error("cannot write " + path.string());
        return path;
    }

    PipelineConfig config_;
};

class FixtureRunner final : public CodeRunner {
  public:
    explicit FixtureRunner(const std::string& path) : path_(path) {
        using nlohmann::json;
        std::ifstream in(path);
        if (!in) throw ProviderError("cannot open code fixture " + path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (is_blank(line)) continue;
            json row = json::parse(line, nullptr, false);
            if (row.is_discarded() || !row.is_object() || !row.contains("id") ||
                !row["id"].is_string() || !row.contains("response_index") ||
                !row["response_index"].is_number_integer() ||
                !row.contains("results") || !row["results"].is_array())
                throw ProviderError(path + ":" + std::to_string(line_no) +
                                    ": malformed code fixture row");
            std::vector<bool> results;
            for (const json& v : row["results"]) {
                if (!v.is_boolean())
                    throw ProviderError(path + ":" + std::to_string(line_no) +
                                        ": results must be booleans");
                results.push_back(v.get<bool>());
            }
            results_[key(row["id"].get<std::string>(),
                         row["response_index"].get<std::int64_t>())] =
                std::move(results);
        }
    }

    std::vector<CaseRun> run(const std::string& record_id,
                             std::int64_t response_index, const std::string& code,
                             const std::string& language,
                             const std::vector<TestCase>& cases) override {
        (void)code;
        (void)language;
        auto it = results_.find(key(record_id, response_index));
        std::vector<CaseRun> runs(cases.size());
        for (std::size_t i = 0; i < cases.size(); ++i) {
            bool passed = it != results_.end() && i < it->second.size() &&
                          it->second[i];
            runs[i].passed = passed;
            runs[i].exit_code = passed ? 0 : 1;
        }
        return runs;
    }

  private:
    static std::string key(const std::string& id, std::int64_t index) {
        return id + '\x1f' + std::to_string(index);
    }

    std::string path_;
    std::unordered_map<std::string, std::vector<bool>> results_;
};

}  // namespace

std::shared_ptr<CodeRunner> make_subprocess_runner(const PipelineConfig& config) {
    return std::make_shared<SubprocessRunner>(config);
}

std::shared_ptr<CodeRunner> make_fixture_runner(const std::string& path) {
    return std::make_shared<FixtureRunner>(path);
}

std::shared_ptr<CodeRunner> make_code_runner(const PipelineConfig& config) {
    if (!config.code.fixture.empty()) return make_fixture_runner(config.code.fixture);
    if (!config.code.endpoint.empty())
        throw ConfigError("config: code provider supports fixtures only");
    return make_subprocess_runner(config);
}

}  // namespace curator
