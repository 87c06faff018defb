#include "scamguard/sim/dataset_io.hpp"

#include <fstream>
#include <sstream>

namespace scamguard::sim {

namespace {

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      f(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::SchemaMismatch, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_calls_jsonl(const std::filesystem::path& path, const std::vector<ProfiledCall>& calls) {
  std::string text;
  for (const auto& c : calls) text += Json{{"event", to_json(c.event)}, {"profile", to_json(c.profile)}}.dump() + "\n";
  write_text(path, text);
}

std::vector<ProfiledCall> read_calls_jsonl(const std::filesystem::path& path) {
  std::vector<ProfiledCall> out;
  for_each_line(path, [&](const Json& j) {
    out.push_back({call_event_from_json(j.at("event")), number_profile_from_json(j.at("profile"))});
  });
  return out;
}

void write_ads_jsonl(const std::filesystem::path& path, const std::vector<AdCapture>& captures) {
  std::string text;
  for (const auto& c : captures) text += to_json(c).dump() + "\n";
  write_text(path, text);
}

std::vector<AdCapture> read_ads_jsonl(const std::filesystem::path& path) {
  std::vector<AdCapture> out;
  for_each_line(path, [&](const Json& j) { out.push_back(ad_capture_from_json(j)); });
  return out;
}

std::string run_dir_name(const Json& config, std::uint64_t seed) {
  return "run-" + hash_identifier(config.dump()).substr(0, 8) + "-s" + std::to_string(seed);
}

}  // namespace scamguard::sim
