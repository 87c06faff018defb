#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "scamguard/error.hpp"

namespace scamguard {

using Json = nlohmann::json;
using Timestamp = std::int64_t;  // UTC seconds

inline constexpr int kScreenshotSize = 32;
using Raster = Eigen::MatrixXd;  // rows x cols, grayscale in [0,1]

enum class ScamCategory : int {
  FreeVacationsAndPrizes = 0,
  LoanScams = 1,
  PhonyDebtCollectors = 2,
  FakeCharities = 3,
  MedicalAlertScams = 4,
  TargetingSeniors = 5,
  WarrantThreats = 6,
  IrsCalls = 7,
};
inline constexpr int kScamCategoryCount = 8;

enum class AdCategory : int {
  Benign = 0,
  FakeInfectionAlert = 1,
  FakeSystemUpdate = 2,
  FakeVulnerabilityPatch = 3,
};
inline constexpr int kAdCategoryCount = 4;

enum class UserAction : int { Answered = 0, Rejected = 1, Ignored = 2 };

int to_code(ScamCategory c) noexcept;
int to_code(AdCategory c) noexcept;
int to_code(UserAction a) noexcept;
ScamCategory scam_category_from_code(int code);
AdCategory ad_category_from_code(int code);
UserAction user_action_from_code(int code);
std::string_view name(ScamCategory c) noexcept;
std::string_view name(AdCategory c) noexcept;

bool is_digest_hex(std::string_view s) noexcept;   // 64 lowercase hex chars
bool is_region_code(std::string_view s) noexcept;  // two uppercase ASCII letters

/// One stranger-call observation. Construction validates every invariant.
class CallEvent {
 public:
  struct Fields {
    std::string number_hash;
    std::string region;
    Timestamp timestamp = 0;
    double ring_secs = 0.0;
    double speak_secs = 0.0;
    UserAction user_action = UserAction::Ignored;
    bool hung_up_by_callee = false;
    bool picked_up = false;
    bool timed_out = false;
    bool on_blacklist = false;
    std::optional<bool> label;

    friend bool operator==(const Fields&, const Fields&) = default;
  };

  explicit CallEvent(Fields fields);

  const Fields& fields() const noexcept { return f_; }
  const std::string& number_hash() const noexcept { return f_.number_hash; }
  const std::string& region() const noexcept { return f_.region; }
  Timestamp timestamp() const noexcept { return f_.timestamp; }
  double ring_secs() const noexcept { return f_.ring_secs; }
  double speak_secs() const noexcept { return f_.speak_secs; }
  UserAction user_action() const noexcept { return f_.user_action; }
  bool hung_up_by_callee() const noexcept { return f_.hung_up_by_callee; }
  bool picked_up() const noexcept { return f_.picked_up; }
  bool timed_out() const noexcept { return f_.timed_out; }
  bool on_blacklist() const noexcept { return f_.on_blacklist; }
  const std::optional<bool>& label() const noexcept { return f_.label; }

  friend bool operator==(const CallEvent& a, const CallEvent& b) = default;

 private:
  Fields f_;
};

struct NumberProfile {
  std::string number_hash;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;
  std::int64_t event_count_7d = 0;
  std::set<std::string> regions_seen;

  void validate() const;
  friend bool operator==(const NumberProfile&, const NumberProfile&) = default;
};

struct RegionContext {
  std::string region;
  std::string language;
  std::int64_t time_bucket = 0;

  void validate() const;
  friend bool operator==(const RegionContext&, const RegionContext&) = default;
};

/// Hours since epoch divided by the bucket width.
std::int64_t time_bucket_of(Timestamp at, int bucket_hours);

struct AdCapture {
  std::string capture_id;
  std::string original_url;
  std::string destination_url;
  std::vector<std::string> redirect_chain;
  Raster screenshot;
  std::string page_text;
  std::string html;
  Timestamp captured_at = 0;
  RegionContext context;
  std::optional<AdCategory> label;

  void validate() const;
  friend bool operator==(const AdCapture&, const AdCapture&) = default;
};

using VerdictCategory = std::variant<std::monostate, AdCategory, ScamCategory>;

struct Verdict {
  double score = 0.0;
  bool decision = false;
  VerdictCategory category;
  std::string model_version;
  Timestamp decided_at = 0;

  static Verdict make(double score, double threshold, VerdictCategory category,
                      std::string model_version, Timestamp decided_at);
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// Identifier handling for privacy-preserving transport.

/// E.164 form ("+" then 8-15 digits). National numbers take the dialing code
/// of `default_region` from the bundled table.
std::string normalize_phone_number(std::string_view raw, std::string_view default_region);

/// Lowercase hex SHA-256 of the UTF-8 bytes.
std::string hash_identifier(std::string_view canonical);

std::string canonicalize_url(std::string_view raw);

/// Host part of an absolute http(s) URL, lowercased. Throws MalformedUrl.
std::string url_host(std::string_view raw);

struct DialingInfo {
  std::string_view region;
  std::string_view country_code;
  std::string_view trunk_prefix;
};
const std::vector<DialingInfo>& dialing_table();
std::optional<DialingInfo> dialing_info(std::string_view region);

// JSON (snake_case field names, integer enum codes, integer timestamps).
Json to_json(const CallEvent& e);
CallEvent call_event_from_json(const Json& j);
Json to_json(const NumberProfile& p);
NumberProfile number_profile_from_json(const Json& j);
Json to_json(const RegionContext& c);
RegionContext region_context_from_json(const Json& j);
Json to_json(const AdCapture& c);
AdCapture ad_capture_from_json(const Json& j);
Json to_json(const Verdict& v);
Verdict verdict_from_json(const Json& j);

}  // namespace scamguard
