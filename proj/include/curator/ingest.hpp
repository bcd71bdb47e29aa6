#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "curator/config.hpp"
#include "curator/types.hpp"

namespace curator {

struct FatalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RejectedRow {
    std::size_t line_no = 0;  // 1-based
    std::string reason;
};

struct IngestReport {
    std::uint64_t rows_read = 0;
    std::uint64_t rows_accepted = 0;
    std::uint64_t rows_rejected = 0;
    std::vector<RejectedRow> rejects;
};

// record <-> JSON. parse_record returns the reject reason on failure.
struct ParseResult {
    std::optional<QueryRecord> record;
    std::string reason;
};

ParseResult record_from_json(const json& row, const PipelineConfig& config);
json record_to_json(const QueryRecord& record);
std::string serialize_record(const QueryRecord& record);

// Streams one validated record at a time in file order; buffering is
// per-record. Duplicate ids within the file are rejected. Returns the report;
// throws FatalError when the file cannot be read. When rejects_path is
// nonempty, rejected raw rows are copied there with line/reason attached.
IngestReport load_records(const std::string& path, const PipelineConfig& config,
                          const std::function<void(QueryRecord&&)>& sink,
                          const std::string& rejects_path = "");

// Line-oriented reader used by the stage drivers (no validation).
class JsonlLineReader {
  public:
    explicit JsonlLineReader(const std::string& path);
    ~JsonlLineReader();
    JsonlLineReader(const JsonlLineReader&) = delete;
    JsonlLineReader& operator=(const JsonlLineReader&) = delete;

    // False at EOF. Skips nothing; blank lines come back empty.
    bool next(std::string& line);
    std::size_t line_no() const { return line_no_; }

  private:
    struct Impl;
    Impl* impl_;
    std::size_t line_no_ = 0;
};

// Writes lines to `path` via a temporary file, renamed on commit(). The
// destructor removes the temporary when commit() was never reached, so a
// failed run leaves no partial output behind.
class JsonlWriter {
  public:
    explicit JsonlWriter(const std::string& path);
    ~JsonlWriter();
    JsonlWriter(const JsonlWriter&) = delete;
    JsonlWriter& operator=(const JsonlWriter&) = delete;

    void write_line(std::string_view line);
    std::uint64_t lines_written() const { return lines_; }
    void commit();

  private:
    struct Impl;
    Impl* impl_;
    std::string path_;
    std::uint64_t lines_ = 0;
    bool committed_ = false;
};

// Serializes a full batch. Returns the number of lines written.
std::uint64_t write_records(const std::vector<QueryRecord>& records,
                            const std::string& path);

}  // namespace curator
