#include "scamguard/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

#include "scamguard/hexfloat.hpp"

namespace scamguard {

namespace {

constexpr std::array<int, 3> kFittedDims = {kRing, kSpeak, kRepeat};

double action_code(UserAction a) {
  switch (a) {
    case UserAction::Answered: return 1.0;
    case UserAction::Rejected: return 0.5;
    case UserAction::Ignored: return 0.0;
  }
  return 0.0;
}

}  // namespace

ScalingSpec::ScalingSpec() : min_(CallVector::Zero()), max_(CallVector::Ones()) {}

ScalingSpec::ScalingSpec(const CallVector& min, const CallVector& max) : min_(min), max_(max) {
  if (!min_.allFinite() || !max_.allFinite() || (max_.array() < min_.array()).any())
    throw Error(ErrorKind::InvalidValue, "scaling requires finite max >= min per dimension");
}

CallVector ScalingSpec::apply(const CallVector& raw) const {
  CallVector out;
  for (int i = 0; i < kCallFeatureDim; ++i) {
    double span = max_[i] - min_[i];
    out[i] = span > 0.0 ? std::clamp((raw[i] - min_[i]) / span, 0.0, 1.0) : 0.0;
  }
  return out;
}

CallVector raw_call_features(const CallEvent& event, const NumberProfile& profile) {
  CallVector v;
  v[kRing] = event.ring_secs();
  v[kSpeak] = event.speak_secs();
  v[kUserAction] = action_code(event.user_action());
  v[kHungUp] = event.hung_up_by_callee() ? 1.0 : 0.0;
  v[kPickedUp] = event.picked_up() ? 1.0 : 0.0;
  v[kTimedOut] = event.timed_out() ? 1.0 : 0.0;
  v[kBlacklist] = event.on_blacklist() ? 1.0 : 0.0;
  v[kHour] = static_cast<double>((event.timestamp() % 86400) / 3600) / 23.0;
  v[kRepeat] = static_cast<double>(profile.event_count_7d);
  return v;
}

CallFeatureVector extract_call_features(const CallEvent& event, const NumberProfile& profile,
                                        const ScalingSpec& scaling) {
  if (profile.number_hash != event.number_hash())
    throw Error(ErrorKind::ProfileMismatch, "profile belongs to a different number");
  return {scaling.apply(raw_call_features(event, profile))};
}

ScalingSpec fit_scaling(std::span<const ProfiledCall> corpus) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "cannot fit scaling on an empty corpus");
  CallVector lo = CallVector::Zero(), hi = CallVector::Ones();
  CallVector first = raw_call_features(corpus.front().event, corpus.front().profile);
  for (int d : kFittedDims) lo[d] = hi[d] = first[d];
  for (const auto& c : corpus) {
    CallVector raw = raw_call_features(c.event, c.profile);
    for (int d : kFittedDims) {
      lo[d] = std::min(lo[d], raw[d]);
      hi[d] = std::max(hi[d], raw[d]);
    }
  }
  return {lo, hi};
}

const Lexicon& Lexicon::bundled() {
  static const Lexicon lexicon{{
      {"infection", {"virus", "viruses", "infected", "infection", "malware", "trojan", "threat", "threats", "damaged", "spyware"}},
      {"update", {"update", "updates", "upgrade", "version", "outdated", "firmware", "install", "system"}},
      {"vulnerability", {"vulnerability", "vulnerable", "patch", "exploit", "security", "critical", "fix", "breach"}},
      {"urgency", {"now", "immediately", "urgent", "hurry", "quickly", "today", "seconds", "minutes"}},
      {"alert", {"alert", "warning", "attention", "danger", "caution", "detected"}},
      {"battery", {"battery", "drain", "draining", "overheating", "charge", "power"}},
      {"cleaner", {"clean", "cleaner", "boost", "booster", "speed", "junk", "optimize", "memory"}},
      {"action", {"download", "click", "tap", "press", "remove", "scan", "protect"}},
      {"prize", {"free", "win", "winner", "prize", "congratulations", "reward", "gift"}},
      {"device", {"phone", "device", "mobile", "smartphone", "cellphone", "android"}},
      {"store", {"play", "store", "app", "apps", "google"}},
      {"countdown", {"countdown", "remaining", "left", "expire", "expires", "timer"}},
      {"commerce", {"sale", "shop", "discount", "deal", "shipping", "price", "offer", "buy"}},
      {"content", {"news", "weather", "sports", "music", "recipe", "travel", "video"}},
      {"alert_intl", {"warnung", "achtung", "attenzione", "avviso", "alerta", "atencion", "alerte"}},
      {"update_intl", {"aktualisierung", "aggiornamento", "actualizacion", "atualizacao", "mise", "jour"}},
  }};
  return lexicon;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

namespace {

std::size_t count_substr(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

std::size_t count_regex(const std::string& s, const std::regex& re) {
  return static_cast<std::size_t>(std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator()));
}

}  // namespace

std::array<int, kHtmlSignalDim> html_structure_counts(std::string_view html, std::string_view page_host) {
  static const std::regex meta_refresh(R"(<meta[^>]*http-equiv\s*=\s*["']?refresh)");
  static const std::regex link_attr(R"((?:href|src)\s*=\s*["']?(https?://[^"'\s>]+))");
  static const std::regex hidden(R"(display\s*:\s*none|visibility\s*:\s*hidden|type\s*=\s*["']?hidden)");
  static const std::regex popup(R"(window\.open\s*\(|alert\s*\(|confirm\s*\()");
  static const std::regex store_link(
      R"(<a\s[^>]*href\s*=\s*["']?(?:https?://play\.google\.com|market://|https?://apps\.apple\.com))");

  std::string s(html);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

  std::set<std::string> external;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), link_attr); it != std::sregex_iterator(); ++it) {
    try {
      auto host = url_host((*it)[1].str());
      if (host != page_host) external.insert(host);
    } catch (const Error&) {
    }
  }

  return {static_cast<int>(count_substr(s, "<script")),
          static_cast<int>(count_regex(s, meta_refresh)),
          static_cast<int>(external.size()),
          static_cast<int>(count_substr(s, "<iframe")),
          static_cast<int>(count_substr(s, "onclick")),
          static_cast<int>(count_regex(s, hidden)),
          static_cast<int>(count_regex(s, popup)),
          static_cast<int>(count_regex(s, store_link))};
}

AdFeatureBundle extract_ad_features(const AdCapture& capture, const Lexicon& lexicon) {
  const auto& img = capture.screenshot;
  if (img.rows() != kScreenshotSize || img.cols() != kScreenshotSize)
    throw Error(ErrorKind::BadImageShape, "screenshot must be 32x32");
  if (!img.allFinite() || img.minCoeff() < 0.0 || img.maxCoeff() > 1.0)
    throw Error(ErrorKind::BadImageShape, "screenshot values must lie in [0,1]");
  if (lexicon.groups.size() != kTextSignalDim)
    throw Error(ErrorKind::InvalidValue, "lexicon must have exactly 16 groups");

  AdFeatureBundle b;
  b.image = img;

  auto tokens = tokenize(capture.page_text);
  if (!tokens.empty()) {
    for (int g = 0; g < kTextSignalDim; ++g) {
      const auto& words = lexicon.groups[static_cast<std::size_t>(g)].words;
      auto hits = std::count_if(tokens.begin(), tokens.end(), [&](const std::string& t) {
        return std::find(words.begin(), words.end(), t) != words.end();
      });
      b.text_signals[g] = std::clamp(static_cast<double>(hits) / static_cast<double>(tokens.size()), 0.0, 1.0);
    }
  }

  std::string host;
  try {
    host = url_host(capture.original_url);
  } catch (const Error&) {
  }
  auto counts = html_structure_counts(capture.html, host);
  for (int i = 0; i < kHtmlSignalDim; ++i) {
    double c = counts[static_cast<std::size_t>(i)];
    b.html_signals[i] = c / (1.0 + c);
  }
  return b;
}

Eigen::VectorXd flatten_bundle(const AdFeatureBundle& bundle) {
  constexpr int pixels = kScreenshotSize * kScreenshotSize;
  Eigen::VectorXd flat(kAdFlatDim);
  for (int r = 0; r < kScreenshotSize; ++r)
    for (int c = 0; c < kScreenshotSize; ++c) flat[r * kScreenshotSize + c] = bundle.image(r, c);
  flat.segment<kTextSignalDim>(pixels) = bundle.text_signals;
  flat.segment<kHtmlSignalDim>(pixels + kTextSignalDim) = bundle.html_signals;
  return flat;
}

AdFeatureBundle unflatten_bundle(const Eigen::Ref<const Eigen::VectorXd>& flat) {
  constexpr int pixels = kScreenshotSize * kScreenshotSize;
  if (flat.size() != kAdFlatDim) throw Error(ErrorKind::BadInputDim, "flattened bundle must have 1048 values");
  AdFeatureBundle b;
  for (int r = 0; r < kScreenshotSize; ++r)
    for (int c = 0; c < kScreenshotSize; ++c) b.image(r, c) = flat[r * kScreenshotSize + c];
  b.text_signals = flat.segment<kTextSignalDim>(pixels);
  b.html_signals = flat.segment<kHtmlSignalDim>(pixels + kTextSignalDim);
  return b;
}

// ScalingSpec document: {"version": "scaling-v1", "feature_order": [...], "min_hex": [...], "max_hex": [...]}
Json to_json(const ScalingSpec& s) {
  Json lo = Json::array(), hi = Json::array();
  for (int i = 0; i < kCallFeatureDim; ++i) {
    lo.push_back(encode_hex_double(s.min()[i]));
    hi.push_back(encode_hex_double(s.max()[i]));
  }
  return {{"version", "scaling-v1"},
          {"feature_order",
           {"ring_secs", "speak_secs", "user_action", "hung_up_by_callee", "picked_up", "timed_out",
            "on_blacklist", "hour_of_day", "repeat_count_7d"}},
          {"min_hex", lo},
          {"max_hex", hi}};
}

ScalingSpec scaling_spec_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("version") || !j.contains("min_hex") || !j.contains("max_hex"))
    throw Error(ErrorKind::SchemaMismatch, "scaling document incomplete");
  if (j.at("version") != "scaling-v1") throw Error(ErrorKind::VersionUnsupported, j.at("version").dump());
  const auto& lo = j.at("min_hex");
  const auto& hi = j.at("max_hex");
  if (!lo.is_array() || !hi.is_array() || lo.size() != kCallFeatureDim || hi.size() != kCallFeatureDim)
    throw Error(ErrorKind::SchemaMismatch, "scaling arrays must have 9 entries");
  CallVector mn, mx;
  for (int i = 0; i < kCallFeatureDim; ++i) {
    if (!lo[static_cast<std::size_t>(i)].is_string() || !hi[static_cast<std::size_t>(i)].is_string())
      throw Error(ErrorKind::SchemaMismatch, "scaling entries must be hex strings");
    mn[i] = decode_hex_double(lo[static_cast<std::size_t>(i)].get<std::string>());
    mx[i] = decode_hex_double(hi[static_cast<std::size_t>(i)].get<std::string>());
  }
  return {mn, mx};
}

Json to_json(const Lexicon& lexicon) {
  Json groups = Json::array();
  for (const auto& g : lexicon.groups) groups.push_back({{"name", g.name}, {"words", g.words}});
  return {{"version", "lexicon-v1"}, {"groups", groups}};
}

Lexicon lexicon_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("groups")) throw Error(ErrorKind::SchemaMismatch, "lexicon missing groups");
  if (j.value("version", "") != "lexicon-v1") throw Error(ErrorKind::VersionUnsupported, "lexicon version");
  Lexicon lex;
  try {
    for (const auto& g : j.at("groups"))
      lex.groups.push_back({g.at("name").get<std::string>(), g.at("words").get<std::vector<std::string>>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
  if (lex.groups.size() != kTextSignalDim) throw Error(ErrorKind::SchemaMismatch, "lexicon must have 16 groups");
  return lex;
}

}  // namespace scamguard
