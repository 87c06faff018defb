#include "scamguard/domain.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace scamguard {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedNumber: return "MalformedNumber";
    case ErrorKind::MalformedUrl: return "MalformedUrl";
    case ErrorKind::UnknownRegion: return "UnknownRegion";
    case ErrorKind::InvalidEvent: return "InvalidEvent";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::ProfileMismatch: return "ProfileMismatch";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::BadImageShape: return "BadImageShape";
    case ErrorKind::BadInputDim: return "BadInputDim";
    case ErrorKind::BadInputShape: return "BadInputShape";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::DegenerateDataset: return "DegenerateDataset";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ArchitectureMismatch: return "ArchitectureMismatch";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::UnknownUrl: return "UnknownUrl";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

int to_code(ScamCategory c) noexcept { return static_cast<int>(c); }
int to_code(AdCategory c) noexcept { return static_cast<int>(c); }
int to_code(UserAction a) noexcept { return static_cast<int>(a); }

ScamCategory scam_category_from_code(int code) {
  if (code < 0 || code >= kScamCategoryCount)
    throw Error(ErrorKind::InvalidValue, "scam category code " + std::to_string(code));
  return static_cast<ScamCategory>(code);
}

AdCategory ad_category_from_code(int code) {
  if (code < 0 || code >= kAdCategoryCount)
    throw Error(ErrorKind::InvalidValue, "ad category code " + std::to_string(code));
  return static_cast<AdCategory>(code);
}

UserAction user_action_from_code(int code) {
  if (code < 0 || code > 2)
    throw Error(ErrorKind::InvalidValue, "user action code " + std::to_string(code));
  return static_cast<UserAction>(code);
}

std::string_view name(ScamCategory c) noexcept {
  switch (c) {
    case ScamCategory::FreeVacationsAndPrizes: return "free_vacations_and_prizes";
    case ScamCategory::LoanScams: return "loan_scams";
    case ScamCategory::PhonyDebtCollectors: return "phony_debt_collectors";
    case ScamCategory::FakeCharities: return "fake_charities";
    case ScamCategory::MedicalAlertScams: return "medical_alert_scams";
    case ScamCategory::TargetingSeniors: return "targeting_seniors";
    case ScamCategory::WarrantThreats: return "warrant_threats";
    case ScamCategory::IrsCalls: return "irs_calls";
  }
  return "?";
}

std::string_view name(AdCategory c) noexcept {
  switch (c) {
    case AdCategory::Benign: return "benign";
    case AdCategory::FakeInfectionAlert: return "fake_infection_alert";
    case AdCategory::FakeSystemUpdate: return "fake_system_update";
    case AdCategory::FakeVulnerabilityPatch: return "fake_vulnerability_patch";
  }
  return "?";
}

bool is_digest_hex(std::string_view s) noexcept {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

bool is_region_code(std::string_view s) noexcept {
  return s.size() == 2 && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

namespace {

void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) throw Error(kind, msg);
}

constexpr double kMaxCallSecs = 86400.0;

}  // namespace

CallEvent::CallEvent(Fields fields) : f_(std::move(fields)) {
  constexpr auto k = ErrorKind::InvalidEvent;
  require(is_digest_hex(f_.number_hash), k, "number_hash must be 64 lowercase hex chars");
  require(is_region_code(f_.region), k, "region must be an uppercase ISO-3166 alpha-2 code");
  require(f_.timestamp >= 0, k, "timestamp must be nonnegative");
  require(std::isfinite(f_.ring_secs) && f_.ring_secs >= 0.0 && f_.ring_secs <= kMaxCallSecs, k,
          "ring_secs out of range");
  require(std::isfinite(f_.speak_secs) && f_.speak_secs >= 0.0 && f_.speak_secs <= kMaxCallSecs, k,
          "speak_secs out of range");
  require(!(f_.speak_secs > 0.0) || f_.picked_up, k, "speak_secs > 0 requires picked_up");
  require(!f_.timed_out || !f_.picked_up, k, "timed_out excludes picked_up");
}

void NumberProfile::validate() const {
  constexpr auto k = ErrorKind::InvalidValue;
  require(is_digest_hex(number_hash), k, "profile number_hash must be a digest");
  require(last_seen >= first_seen, k, "last_seen before first_seen");
  require(event_count_7d >= 0, k, "negative event count");
  for (const auto& r : regions_seen) require(is_region_code(r), k, "bad region in profile");
}

void RegionContext::validate() const {
  require(is_region_code(region), ErrorKind::InvalidValue, "context region must be uppercase alpha-2");
  require(time_bucket >= 0, ErrorKind::InvalidValue, "time_bucket must be nonnegative");
}

std::int64_t time_bucket_of(Timestamp at, int bucket_hours) {
  require(bucket_hours >= 1, ErrorKind::InvalidValue, "bucket hours must be >= 1");
  require(at >= 0, ErrorKind::InvalidValue, "negative timestamp");
  return at / 3600 / bucket_hours;
}

void AdCapture::validate() const {
  constexpr auto k = ErrorKind::InvalidValue;
  require(!redirect_chain.empty() && redirect_chain.front() == original_url &&
              redirect_chain.back() == destination_url,
          k, "redirect_chain must run from original_url to destination_url");
  require(screenshot.rows() == kScreenshotSize && screenshot.cols() == kScreenshotSize,
          ErrorKind::BadImageShape, "screenshot must be 32x32");
  require(screenshot.allFinite() && screenshot.minCoeff() >= 0.0 && screenshot.maxCoeff() <= 1.0,
          ErrorKind::BadImageShape, "screenshot values must be in [0,1]");
  context.validate();
}

Verdict Verdict::make(double score, double threshold, VerdictCategory category,
                      std::string model_version, Timestamp decided_at) {
  require(std::isfinite(score) && score >= 0.0 && score <= 1.0, ErrorKind::InvalidValue,
          "verdict score must be in [0,1]");
  return Verdict{score, score >= threshold, category, std::move(model_version), decided_at};
}

// ---------------------------------------------------------------------------
// Phone numbers

const std::vector<DialingInfo>& dialing_table() {
  static const std::vector<DialingInfo> table = {
      {"BR", "55", "0"},  {"CA", "1", "1"},  {"CN", "86", "0"}, {"DE", "49", "0"},
      {"ES", "34", ""},   {"FR", "33", "0"}, {"GB", "44", "0"}, {"IN", "91", "0"},
      {"IT", "39", ""},   {"JP", "81", "0"}, {"MX", "52", ""},  {"TW", "886", "0"},
      {"US", "1", "1"},
  };
  return table;
}

std::optional<DialingInfo> dialing_info(std::string_view region) {
  for (const auto& d : dialing_table())
    if (d.region == region) return d;
  return std::nullopt;
}

std::string normalize_phone_number(std::string_view raw, std::string_view default_region) {
  constexpr auto k = ErrorKind::MalformedNumber;
  std::string digits;
  bool international = false;
  bool seen_digit = false;
  for (char c : raw) {
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
    } else if (c == '+' && !seen_digit && !international) {
      international = true;
    } else if (c == ' ' || c == '-' || c == '.' || c == '(' || c == ')' || c == '/' || c == '\t') {
      continue;
    } else {
      throw Error(k, "unexpected character in phone number");
    }
  }
  if (digits.empty()) throw Error(k, "no digits");

  if (!international && digits.starts_with("00")) {
    digits.erase(0, 2);
    international = true;
  }
  if (!international) {
    auto info = dialing_info(default_region);
    if (!info) throw Error(ErrorKind::UnknownRegion, std::string(default_region));
    if (!info->trunk_prefix.empty() && digits.starts_with(info->trunk_prefix))
      digits.erase(0, info->trunk_prefix.size());
    digits.insert(0, info->country_code);
  }
  if (digits.size() < 8 || digits.size() > 15)
    throw Error(k, "expected 8-15 digits, got " + std::to_string(digits.size()));
  return "+" + digits;
}

std::string hash_identifier(std::string_view canonical) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
  SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), md.data());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (unsigned char b : md) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// URLs

namespace {

struct UrlParts {
  std::string scheme, userinfo, host, port, path, query;
  bool has_query = false;
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool is_unreserved(unsigned char c) {
  return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

// Decodes %XX of unreserved characters and uppercases the hex of the rest.
std::string normalize_percent(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 2 >= s.size()) throw Error(ErrorKind::MalformedUrl, "truncated percent escape");
    int hi = hex_value(s[i + 1]), lo = hex_value(s[i + 2]);
    if (hi < 0 || lo < 0) throw Error(ErrorKind::MalformedUrl, "bad percent escape");
    auto c = static_cast<unsigned char>(hi * 16 + lo);
    if (is_unreserved(c)) {
      out.push_back(static_cast<char>(c));
    } else {
      static constexpr char kHex[] = "0123456789ABCDEF";
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
    i += 2;
  }
  return out;
}

UrlParts parse_url(std::string_view raw) {
  constexpr auto k = ErrorKind::MalformedUrl;
  for (unsigned char c : raw)
    if (c <= 0x20 || c == 0x7F) throw Error(k, "whitespace or control character in URL");
  auto sep = raw.find("://");
  if (sep == std::string_view::npos) throw Error(k, "missing scheme");
  UrlParts u;
  u.scheme = lower(raw.substr(0, sep));
  if (u.scheme != "http" && u.scheme != "https") throw Error(k, "scheme must be http or https");
  auto rest = raw.substr(sep + 3);
  if (auto hash = rest.find('#'); hash != std::string_view::npos) rest = rest.substr(0, hash);
  auto auth_end = rest.find_first_of("/?");
  auto authority = rest.substr(0, auth_end);
  auto tail = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    u.userinfo = std::string(authority.substr(0, at));
    authority = authority.substr(at + 1);
  }
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    u.port = std::string(authority.substr(colon + 1));
    authority = authority.substr(0, colon);
    if (u.port.empty() || u.port.size() > 5 ||
        !std::all_of(u.port.begin(), u.port.end(), [](unsigned char c) { return std::isdigit(c); }))
      throw Error(k, "bad port");
    u.port = std::to_string(std::stoi(u.port));
  }
  u.host = lower(authority);
  if (u.host.empty()) throw Error(k, "empty host");
  for (unsigned char c : u.host)
    if (!(std::isalnum(c) || c == '-' || c == '.' || c == '[' || c == ']' || c == ':' || c == '_'))
      throw Error(k, "bad host character");
  auto q = tail.find('?');
  u.path = std::string(tail.substr(0, q));
  if (q != std::string_view::npos) {
    u.has_query = true;
    u.query = std::string(tail.substr(q + 1));
  }
  return u;
}

}  // namespace

std::string canonicalize_url(std::string_view raw) {
  auto u = parse_url(raw);
  if ((u.scheme == "http" && u.port == "80") || (u.scheme == "https" && u.port == "443")) u.port.clear();
  std::string out = u.scheme + "://";
  if (!u.userinfo.empty()) out += normalize_percent(u.userinfo) + "@";
  out += u.host;
  if (!u.port.empty()) out += ":" + u.port;
  out += u.path.empty() ? std::string("/") : normalize_percent(u.path);
  if (u.has_query) out += "?" + normalize_percent(u.query);
  return out;
}

std::string url_host(std::string_view raw) { return parse_url(raw).host; }

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorKind::SchemaMismatch, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::SchemaMismatch, std::string("wrong type for field '") + key + "'");
  }
}

Json raster_to_json(const Raster& r) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < r.cols(); ++c) row.push_back(r(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Raster raster_from_json(const Json& j) {
  auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) throw Error(ErrorKind::BadImageShape, "empty screenshot");
  Raster r(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw Error(ErrorKind::BadImageShape, "ragged screenshot");
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  }
  return r;
}

}  // namespace

Json to_json(const CallEvent& e) {
  Json j = {
      {"number_hash", e.number_hash()},
      {"region", e.region()},
      {"timestamp", e.timestamp()},
      {"ring_secs", e.ring_secs()},
      {"speak_secs", e.speak_secs()},
      {"user_action", to_code(e.user_action())},
      {"hung_up_by_callee", e.hung_up_by_callee()},
      {"picked_up", e.picked_up()},
      {"timed_out", e.timed_out()},
      {"on_blacklist", e.on_blacklist()},
  };
  j["label"] = e.label() ? Json(*e.label()) : Json(nullptr);
  return j;
}

CallEvent call_event_from_json(const Json& j) {
  CallEvent::Fields f;
  f.number_hash = field<std::string>(j, "number_hash");
  f.region = field<std::string>(j, "region");
  f.timestamp = field<Timestamp>(j, "timestamp");
  f.ring_secs = field<double>(j, "ring_secs");
  f.speak_secs = field<double>(j, "speak_secs");
  f.user_action = user_action_from_code(field<int>(j, "user_action"));
  f.hung_up_by_callee = field<bool>(j, "hung_up_by_callee");
  f.picked_up = field<bool>(j, "picked_up");
  f.timed_out = field<bool>(j, "timed_out");
  f.on_blacklist = field<bool>(j, "on_blacklist");
  if (j.contains("label") && !j.at("label").is_null()) f.label = field<bool>(j, "label");
  return CallEvent(std::move(f));
}

Json to_json(const NumberProfile& p) {
  return {{"number_hash", p.number_hash},
          {"first_seen", p.first_seen},
          {"last_seen", p.last_seen},
          {"event_count_7d", p.event_count_7d},
          {"regions_seen", p.regions_seen}};
}

NumberProfile number_profile_from_json(const Json& j) {
  NumberProfile p;
  p.number_hash = field<std::string>(j, "number_hash");
  p.first_seen = field<Timestamp>(j, "first_seen");
  p.last_seen = field<Timestamp>(j, "last_seen");
  p.event_count_7d = field<std::int64_t>(j, "event_count_7d");
  p.regions_seen = field<std::set<std::string>>(j, "regions_seen");
  p.validate();
  return p;
}

Json to_json(const RegionContext& c) {
  return {{"region", c.region}, {"language", c.language}, {"time_bucket", c.time_bucket}};
}

RegionContext region_context_from_json(const Json& j) {
  RegionContext c{field<std::string>(j, "region"), field<std::string>(j, "language"),
                  field<std::int64_t>(j, "time_bucket")};
  c.validate();
  return c;
}

Json to_json(const AdCapture& c) {
  Json j = {{"capture_id", c.capture_id},
            {"original_url", c.original_url},
            {"destination_url", c.destination_url},
            {"redirect_chain", c.redirect_chain},
            {"screenshot", raster_to_json(c.screenshot)},
            {"page_text", c.page_text},
            {"html", c.html},
            {"captured_at", c.captured_at},
            {"context", to_json(c.context)}};
  j["label"] = c.label ? Json(to_code(*c.label)) : Json(nullptr);
  return j;
}

AdCapture ad_capture_from_json(const Json& j) {
  AdCapture c;
  c.capture_id = field<std::string>(j, "capture_id");
  c.original_url = field<std::string>(j, "original_url");
  c.destination_url = field<std::string>(j, "destination_url");
  c.redirect_chain = field<std::vector<std::string>>(j, "redirect_chain");
  try {
    c.screenshot = raster_from_json(j.at("screenshot"));
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::SchemaMismatch, "bad screenshot");
  }
  c.page_text = field<std::string>(j, "page_text");
  c.html = field<std::string>(j, "html");
  c.captured_at = field<Timestamp>(j, "captured_at");
  if (!j.contains("context")) throw Error(ErrorKind::SchemaMismatch, "missing field 'context'");
  c.context = region_context_from_json(j.at("context"));
  if (j.contains("label") && !j.at("label").is_null()) c.label = ad_category_from_code(field<int>(j, "label"));
  c.validate();
  return c;
}

Json to_json(const Verdict& v) {
  Json j = {{"score", v.score},
            {"decision", v.decision},
            {"model_version", v.model_version},
            {"decided_at", v.decided_at}};
  if (const auto* ad = std::get_if<AdCategory>(&v.category)) {
    j["category"] = to_code(*ad);
    j["category_kind"] = "ad";
  } else if (const auto* scam = std::get_if<ScamCategory>(&v.category)) {
    j["category"] = to_code(*scam);
    j["category_kind"] = "scam";
  } else {
    j["category"] = nullptr;
  }
  return j;
}

Verdict verdict_from_json(const Json& j) {
  Verdict v;
  v.score = field<double>(j, "score");
  v.decision = field<bool>(j, "decision");
  v.model_version = field<std::string>(j, "model_version");
  v.decided_at = field<Timestamp>(j, "decided_at");
  if (j.contains("category") && !j.at("category").is_null()) {
    auto kind = field<std::string>(j, "category_kind");
    int code = field<int>(j, "category");
    if (kind == "ad")
      v.category = ad_category_from_code(code);
    else if (kind == "scam")
      v.category = scam_category_from_code(code);
    else
      throw Error(ErrorKind::SchemaMismatch, "unknown category_kind");
  }
  return v;
}

}  // namespace scamguard
