#include "scamguard/service/event_log.hpp"

#include "scamguard/sim/dataset_io.hpp"

namespace scamguard::service {

namespace fs = std::filesystem;

Json to_json(const LogRecord& r) { return {{"seq", r.seq}, {"at", r.at}, {"type", r.type}, {"payload", r.payload}}; }

LogRecord log_record_from_json(const Json& j) {
  try {
    LogRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.at = j.at("at").get<Timestamp>();
    r.type = j.at("type").get<std::string>();
    r.payload = j.at("payload");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidEvent, std::string("log record: ") + e.what());
  }
}

namespace {

struct Scan {
  std::vector<LogRecord> records;
  std::uintmax_t good_bytes = 0;  // length of the prefix holding complete records
};

Scan scan(const fs::path& path) {
  Scan s;
  if (!fs::exists(path)) return s;
  const std::string text = sim::read_text(path);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    const std::string_view line(text.data() + pos, nl - pos);
    LogRecord r;
    try {
      r = log_record_from_json(Json::parse(line));
    } catch (const std::exception& e) {
      if (nl + 1 >= text.size()) break;  // garbage on the final line only
      throw Error(ErrorKind::InvalidEvent, "corrupt event log record at byte " + std::to_string(pos));
    }
    if (r.seq != s.records.size() + 1)
      throw Error(ErrorKind::InvalidEvent, "event log sequence gap at seq " + std::to_string(r.seq));
    s.records.push_back(std::move(r));
    pos = nl + 1;
    s.good_bytes = pos;
  }
  return s;
}

}  // namespace

std::vector<LogRecord> EventLog::read(const fs::path& path) { return scan(path).records; }

EventLog::EventLog(fs::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  auto s = scan(path_);
  if (fs::exists(path_) && fs::file_size(path_) != s.good_bytes) fs::resize_file(path_, s.good_bytes);
  recovered_ = std::move(s.records);
  next_seq_ = recovered_.size() + 1;
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorKind::Io, "cannot open event log " + path_.string());
}

LogRecord EventLog::append(std::string type, Json payload, Timestamp at) {
  std::lock_guard lock(mu_);
  LogRecord r{next_seq_, at, std::move(type), std::move(payload)};
  out_ << to_json(r).dump() << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorKind::Io, "event log write failed");
  ++next_seq_;
  return r;
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return next_seq_ - 1;
}

}  // namespace scamguard::service
