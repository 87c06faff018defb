#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scamguard/features.hpp"

namespace scamguard::sim {

/// Synthetic stranger-call traffic.
///
/// Daily volume per country is Poisson with mean `weekday_daily_calls` on
/// weekdays and `weekday_daily_calls * weekend_ratio` on weekends. Each call
/// is drawn from a scam or benign profile and then re-drawn until its ground
/// truth agrees with the scam rule (see `scam_rule`). Most scams come from
/// spoofed one-shot numbers, which look like ordinary callers except for a
/// short ring during working hours; the rest are blacklisted repeat callers.
/// With probability `label_noise` the published label is re-drawn from
/// Bernoulli(scam_rate), which keeps the overall prevalence at scam_rate.
///
/// Timestamps are on each country's wall clock (no zone offsets), so the
/// hour feature sees working hours as 08-17 everywhere.
struct TrafficConfig {
  std::vector<std::string> countries = {"US", "IN", "TW", "BR", "IT", "GB", "FR", "DE"};
  int days = 28;
  int weekday_daily_calls = 300;
  double weekend_ratio = 1.0 / 3.0;
  double scam_rate = 0.10;
  double label_noise = 0.05;
  double spoofed_share = 0.75;
  Timestamp start = 1467590400;  // Monday 2016-07-04 00:00 UTC
  std::uint64_t seed = 7;

  void validate() const;
};

Json to_json(const TrafficConfig& cfg);
TrafficConfig traffic_config_from_json(const Json& j);

inline constexpr int kWorkStartHour = 8;
inline constexpr int kWorkEndHour = 18;  // exclusive
inline constexpr double kShortRingSecs = 8.0;
inline constexpr std::int64_t kRepeatThreshold = 4;

bool is_working_hour(int hour) noexcept;
bool is_weekend(Timestamp t) noexcept;

/// Ground truth: (short ring AND working hour) OR (blacklisted AND repeat >= 4).
bool scam_rule(const CallEvent& e, const NumberProfile& p) noexcept;

/// Labeled calls in generation order (country, then day).
std::vector<ProfiledCall> generate_call_dataset(const TrafficConfig& cfg);

/// Canonical scam archetype: short ring, blacklisted, 6 repeats, mid-morning.
ProfiledCall scam_archetype(const std::string& region, Timestamp day_start, const std::string& number_hash);

}  // namespace scamguard::sim
