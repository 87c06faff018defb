#include "scamguard/service/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>

#include "scamguard/sim/dataset_io.hpp"

namespace scamguard::service {

namespace fs = std::filesystem;

namespace {

constexpr Timestamp kWeek = 7 * 86400;
constexpr double kAdThreshold = 0.5;

Reply json_reply(int status, const Json& body) { return {status, body.dump()}; }

Reply error_reply(int status, std::string_view kind, std::string_view message) {
  return json_reply(status, {{"error", kind}, {"message", message}});
}

Reply error_reply(const Error& e) {
  const int status = e.kind() == ErrorKind::NotFound ? 404 : 400;
  return error_reply(status, to_string(e.kind()), e.what());
}

Json parse_body(std::string_view body) {
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw Error(ErrorKind::SchemaMismatch, "request body is not valid JSON");
  }
}

const std::set<std::string, std::less<>>& call_event_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "number_hash", "region",    "timestamp", "ring_secs",    "speak_secs", "user_action",
      "hung_up_by_callee", "picked_up", "timed_out", "on_blacklist", "label"};
  return keys;
}

std::string report_id(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rpt-%010llu", static_cast<unsigned long long>(n));
  return buf;
}

std::uint64_t report_number(std::string_view id) {
  if (id.size() != 14 || !id.starts_with("rpt-")) return 0;
  std::uint64_t n = 0;
  for (char c : id.substr(4)) {
    if (c < '0' || c > '9') return 0;
    n = n * 10 + static_cast<std::uint64_t>(c - '0');
  }
  return n;
}

Timestamp system_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

}  // namespace

// ---------------------------------------------------------------------------

SimulatedCaptureSource::SimulatedCaptureSource(sim::AdServerWorld world) : world_(std::move(world)) {
  world_.validate();
}

bool SimulatedCaptureSource::knows_region(std::string_view region) const { return world_.find_region(region) != nullptr; }

std::vector<AdCapture> SimulatedCaptureSource::fetch(const std::string& canonical_url, std::span<const std::string> regions,
                                                     Timestamp at) {
  const auto id = sim::parse_ad_url(canonical_url);
  if (!id || *id >= world_.url_count) throw Error(ErrorKind::UnknownUrl, "url is not served by the simulated world");
  return sim::fetch_from_regions(world_, *id, regions, at);
}

Json to_json(const AnalysisReport& r) {
  return {{"report_id", r.report_id},       {"original_url", r.original_url}, {"destination_url", r.destination_url},
          {"screenshot_ref", r.screenshot_ref}, {"captured_at", r.captured_at},   {"region", r.region},
          {"verdict", to_json(r.verdict)}};
}

AnalysisReport analysis_report_from_json(const Json& j) {
  try {
    AnalysisReport r;
    r.report_id = j.at("report_id").get<std::string>();
    r.original_url = j.at("original_url").get<std::string>();
    r.destination_url = j.at("destination_url").get<std::string>();
    r.screenshot_ref = j.at("screenshot_ref").get<std::string>();
    r.captured_at = j.at("captured_at").get<Timestamp>();
    r.region = j.at("region").get<std::string>();
    r.verdict = verdict_from_json(j.at("verdict"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("report: ") + e.what());
  }
}

std::string encode_pgm(const Raster& img) {
  std::string out = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) + "\n255\n";
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c)
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(img(r, c), 0.0, 1.0) * 255.0))));
  return out;
}

Raster decode_pgm(std::string_view bytes) {
  // header: P5 <ws> width <ws> height <ws> maxval <single ws> data
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return std::string(bytes.substr(start, pos - start));
  };
  if (token() != "P5") throw Error(ErrorKind::BadImageShape, "not a binary greymap");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw Error(ErrorKind::BadImageShape, "bad greymap header");
  }
  ++pos;
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255 || bytes.size() - pos != static_cast<std::size_t>(w) * h)
    throw Error(ErrorKind::BadImageShape, "bad greymap size");
  Raster img(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) img(r, c) = static_cast<unsigned char>(bytes[pos++]) / static_cast<double>(maxval);
  return img;
}

// ---------------------------------------------------------------------------

DetectionService::DetectionService(ServiceConfig cfg, std::shared_ptr<CaptureSource> source)
    : cfg_(std::move(cfg)),
      source_(std::move(source)),
      registry_((fs::create_directories(cfg_.data_dir), cfg_.data_dir / "models")),
      log_(cfg_.data_dir / "events.log") {
  if (!cfg_.clock) cfg_.clock = system_now;
  fs::create_directories(cfg_.data_dir / "reports");
  fs::create_directories(cfg_.data_dir / "screenshots");
  replay(log_.recovered());
}

std::mutex& DetectionService::stripe(std::string_view hash) {
  return stripes_[std::hash<std::string_view>{}(hash) % stripes_.size()];
}

void DetectionService::replay(const std::vector<LogRecord>& records) {
  for (const auto& r : records) {
    if (r.type == "call_feedback") {
      apply_call(call_event_from_json(r.payload.at("event")), verdict_from_json(r.payload.at("verdict")));
    } else if (r.type == "ad_submission") {
      for (const auto& rep : r.payload.at("reports")) {
        const auto id = rep.at("report_id").get<std::string>();
        reports_[id] = rep.dump();
        report_counter_ = std::max(report_counter_, report_number(id));
      }
    } else if (r.type == "model_activation") {
      try {
        apply_activation(model_kind_from_string(r.payload.at("kind").get<std::string>()),
                         r.payload.at("version").get<std::string>());
      } catch (const Error& e) {
        std::cerr << "replay: skipping activation at seq " << r.seq << ": " << e.what() << "\n";
      }
    }
  }
}

void DetectionService::apply_activation(ModelKind kind, const std::string& version) { registry_.activate(kind, version); }

NumberProfile DetectionService::updated_profile(const CallEvent& event) const {
  std::shared_lock lock(state_mu_);
  NumberProfile p;
  std::vector<Timestamp> seen;
  if (auto it = numbers_.find(event.number_hash()); it != numbers_.end()) {
    p = it->second.profile;
    seen = it->second.seen;
  } else {
    p.number_hash = event.number_hash();
    p.first_seen = p.last_seen = event.timestamp();
  }
  seen.push_back(event.timestamp());
  p.first_seen = std::min(p.first_seen, event.timestamp());
  p.last_seen = std::max(p.last_seen, event.timestamp());
  p.event_count_7d = std::count_if(seen.begin(), seen.end(), [&](Timestamp t) { return t > p.last_seen - kWeek; });
  p.regions_seen.insert(event.region());
  return p;
}

void DetectionService::apply_call(const CallEvent& event, const Verdict& verdict) {
  auto profile = updated_profile(event);
  std::unique_lock lock(state_mu_);
  auto& st = numbers_[event.number_hash()];
  st.profile = std::move(profile);
  st.seen.insert(std::upper_bound(st.seen.begin(), st.seen.end(), event.timestamp()), event.timestamp());
  st.latest = verdict;
  if (verdict.decision) ++st.scam_verdicts;
}

Reply DetectionService::call_feedback(std::string_view body) {
  std::optional<CallEvent> event;
  try {
    const Json j = parse_body(body);
    if (!j.is_object()) throw Error(ErrorKind::SchemaMismatch, "call feedback must be a JSON object");
    for (const auto& [key, _] : j.items())
      if (!call_event_keys().contains(key))
        throw Error(ErrorKind::SchemaMismatch, "unexpected field '" + key + "' (only hashed identifiers are accepted)");
    event.emplace(call_event_from_json(j));
    if (!dialing_info(event->region())) throw Error(ErrorKind::UnknownRegion, "region " + event->region() + " is not in the regional table");
  } catch (const Error& e) {
    return error_reply(e);
  }

  const auto model = registry_.calls();
  if (!model) return error_reply(503, "NoActiveModel", "no calls model is active");

  std::lock_guard key_lock(stripe(event->number_hash()));
  const auto profile = updated_profile(*event);
  const auto features = extract_call_features(*event, profile, model->scaling);
  const double score = nn::dnn_forward(model->dnn, features);
  const auto verdict = Verdict::make(score, model->dnn.threshold(), std::monostate{}, model->dnn.version(), cfg_.clock());
  log_.append("call_feedback", {{"event", to_json(*event)}, {"verdict", to_json(verdict)}}, verdict.decided_at);
  apply_call(*event, verdict);
  return json_reply(200, to_json(verdict));
}

Reply DetectionService::number_lookup(std::string_view hash) const {
  if (!is_digest_hex(hash)) return error_reply(400, "MalformedHash", "number hash must be 64 lowercase hex characters");
  std::shared_lock lock(state_mu_);
  auto it = numbers_.find(std::string(hash));
  if (it == numbers_.end()) return error_reply(404, "NotFound", "number has never been reported");
  const auto& st = it->second;
  return json_reply(200, {{"profile", to_json(st.profile)},
                          {"verdict", st.latest ? to_json(*st.latest) : Json(nullptr)},
                          {"scam_verdicts", st.scam_verdicts}});
}

Reply DetectionService::submit_ad(std::string_view body) {
  std::string url;
  std::vector<std::string> regions;
  try {
    const Json j = parse_body(body);
    if (!j.is_object() || !j.contains("url") || !j.at("url").is_string())
      throw Error(ErrorKind::SchemaMismatch, "body needs a string 'url'");
    url = canonicalize_url(j.at("url").get<std::string>());
    if (!j.contains("regions") || !j.at("regions").is_array() || j.at("regions").empty())
      throw Error(ErrorKind::SchemaMismatch, "body needs a non-empty 'regions' array");
    for (const auto& r : j.at("regions")) {
      if (!r.is_string()) throw Error(ErrorKind::SchemaMismatch, "regions must be strings");
      regions.push_back(r.get<std::string>());
      if (!source_ || !source_->knows_region(regions.back()))
        throw Error(ErrorKind::UnknownRegion, "region " + regions.back() + " has no capture vantage");
    }
  } catch (const Error& e) {
    return error_reply(e);
  }

  const auto model = registry_.ads();
  if (!model) return error_reply(503, "NoActiveModel", "no ads model is active");

  std::lock_guard lock(ads_mu_);
  const Timestamp now = cfg_.clock();
  std::vector<AdCapture> captures;
  try {
    captures = source_->fetch(url, regions, now);
  } catch (const Error& e) {
    return error_reply(e);
  }

  Json reports = Json::array();
  Json ids = Json::array();
  auto counter = report_counter_;
  for (const auto& cap : captures) {
    const Eigen::Vector4d p = nn::cnn_forward(model->cnn, cap.screenshot);
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    const double score = std::clamp(1.0 - p[0], 0.0, 1.0);
    AnalysisReport rep;
    rep.report_id = report_id(++counter);
    rep.original_url = canonicalize_url(cap.original_url);
    rep.destination_url = canonicalize_url(cap.destination_url);
    rep.screenshot_ref = "screenshots/" + rep.report_id + ".pgm";
    rep.captured_at = cap.captured_at;
    rep.region = cap.context.region;
    rep.verdict = Verdict::make(score, kAdThreshold, ad_category_from_code(static_cast<int>(best)), model->cnn.version(), now);
    const Json rj = to_json(rep);
    sim::write_text(cfg_.data_dir / rep.screenshot_ref, encode_pgm(cap.screenshot));
    sim::write_text(cfg_.data_dir / "reports" / (rep.report_id + ".json"), rj.dump());
    reports.push_back(rj);
    ids.push_back(rep.report_id);
  }
  log_.append("ad_submission", {{"url", url}, {"regions", regions}, {"reports", reports}}, now);
  {
    std::unique_lock state(state_mu_);
    for (const auto& rj : reports) reports_[rj.at("report_id").get<std::string>()] = rj.dump();
    report_counter_ = counter;
  }
  return json_reply(200, {{"report_ids", ids}});
}

Reply DetectionService::ad_report(std::string_view id) const {
  std::shared_lock lock(state_mu_);
  auto it = reports_.find(std::string(id));
  if (it == reports_.end()) return error_reply(404, "NotFound", "unknown report id");
  return {200, it->second};
}

Reply DetectionService::model_version() const {
  const auto v = registry_.active();
  return json_reply(200, {{"calls", v.calls ? Json(*v.calls) : Json(nullptr)}, {"ads", v.ads ? Json(*v.ads) : Json(nullptr)}});
}

Reply DetectionService::activate(std::string_view body) {
  ModelKind kind;
  std::string version;
  try {
    const Json j = parse_body(body);
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string() || !j.contains("version") ||
        !j.at("version").is_string())
      throw Error(ErrorKind::SchemaMismatch, "body needs string 'kind' and 'version'");
    kind = model_kind_from_string(j.at("kind").get<std::string>());
    version = j.at("version").get<std::string>();
  } catch (const Error& e) {
    return error_reply(e);
  }

  std::lock_guard lock(activation_mu_);
  try {
    apply_activation(kind, version);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NotFound) return error_reply(404, "NotFound", e.what());
    return error_reply(409, "InvalidModelDocument", e.what());
  }
  log_.append("model_activation", {{"kind", to_string(kind)}, {"version", version}}, cfg_.clock());
  const auto v = registry_.active();
  return json_reply(200, {{"calls", v.calls ? Json(*v.calls) : Json(nullptr)}, {"ads", v.ads ? Json(*v.ads) : Json(nullptr)}});
}

Reply DetectionService::client_defense(std::optional<std::size_t> top_n) const {
  const auto model = registry_.calls();
  if (!model) return error_reply(503, "NoActiveModel", "no calls model is active");
  const std::size_t n = top_n.value_or(cfg_.defense_top_n);
  std::vector<std::pair<std::int64_t, std::string>> ranked;
  {
    std::shared_lock lock(state_mu_);
    for (const auto& [hash, st] : numbers_)
      if (st.scam_verdicts > 0) ranked.emplace_back(st.scam_verdicts, hash);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (ranked.size() > n) ranked.resize(n);
  Json blacklist = Json::array();
  for (const auto& [_, hash] : ranked) blacklist.push_back(hash);
  return json_reply(200, {{"model_version", model->dnn.version()}, {"threshold", model->dnn.threshold()}, {"blacklist", blacklist}});
}

}  // namespace scamguard::service
