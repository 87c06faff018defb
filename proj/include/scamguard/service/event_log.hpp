#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "scamguard/domain.hpp"

namespace scamguard::service {

struct LogRecord {
  std::uint64_t seq = 0;
  Timestamp at = 0;
  std::string type;  // call_feedback | ad_submission | verdict | model_activation
  Json payload;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

Json to_json(const LogRecord& r);
LogRecord log_record_from_json(const Json& j);

/// Append-only JSONL file. Each append is one '\n'-terminated line, flushed
/// before returning. Sequence numbers start at 1 and increase by one.
class EventLog {
 public:
  /// Opens (creating if needed) and reads existing records. A torn final line
  /// left by a crash is dropped from the file before new appends.
  explicit EventLog(std::filesystem::path path);

  const std::vector<LogRecord>& recovered() const noexcept { return recovered_; }

  LogRecord append(std::string type, Json payload, Timestamp at);

  std::uint64_t last_seq() const;
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Complete records in file order; ignores a torn or unparseable last line.
  /// Throws InvalidEvent for corruption before the last line or a sequence gap.
  static std::vector<LogRecord> read(const std::filesystem::path& path);

 private:
  std::filesystem::path path_;
  std::vector<LogRecord> recovered_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace scamguard::service
