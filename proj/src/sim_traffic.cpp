#include "scamguard/sim/traffic.hpp"

#include <cmath>
#include <random>

#include "scamguard/rng.hpp"

namespace scamguard::sim {

namespace {

constexpr std::int64_t kDay = 86400;
constexpr double kRingCap = 120.0;
constexpr double kSpeakCap = 3600.0;

std::uint64_t text_key(std::string_view s) {
  std::uint64_t h = 0x5eedf00dULL;
  for (unsigned char c : s) h = mix64(h ^ c);
  return h;
}

int draw_hour(Rng& rng, double p_working) {
  if (bernoulli(rng, p_working))
    return kWorkStartHour + static_cast<int>(uniform_index(rng, kWorkEndHour - kWorkStartHour));
  int k = static_cast<int>(uniform_index(rng, 24 - (kWorkEndHour - kWorkStartHour)));
  return k < kWorkStartHour ? k : k + (kWorkEndHour - kWorkStartHour);
}

std::int64_t draw_repeat(Rng& rng, double mean) {
  // geometric on {1, 2, ...}
  return 1 + std::geometric_distribution<std::int64_t>(1.0 / mean)(rng);
}

struct Draw {
  double ring;
  int hour;
  bool blacklisted;
  std::int64_t repeat;
};

bool rule_of(const Draw& d) {
  return (d.ring < kShortRingSecs && is_working_hour(d.hour)) || (d.blacklisted && d.repeat >= kRepeatThreshold);
}

Draw draw_profile(Rng& rng, bool scam, double spoofed_share) {
  const bool spoofed = scam && bernoulli(rng, spoofed_share);
  for (;;) {
    Draw d{};
    if (spoofed) {
      d.ring = uniform(rng, 0.0, 10.0);
      d.hour = draw_hour(rng, 0.9);
      d.blacklisted = bernoulli(rng, 0.02);
      d.repeat = draw_repeat(rng, 1.5);
    } else if (scam) {
      d.ring = std::min(std::exponential_distribution<double>(1.0 / 15.0)(rng), kRingCap);
      d.hour = draw_hour(rng, 0.7);
      d.blacklisted = bernoulli(rng, 0.95);
      d.repeat = draw_repeat(rng, 6.0);
    } else {
      d.ring = std::min(std::exponential_distribution<double>(1.0 / 15.0)(rng), kRingCap);
      d.hour = draw_hour(rng, 0.4);
      d.blacklisted = bernoulli(rng, 0.02);
      d.repeat = draw_repeat(rng, 1.5);
    }
    if (rule_of(d) == scam) return d;
  }
}

ProfiledCall make_call(Rng& rng, const TrafficConfig& cfg, const std::string& region, std::string_view cc,
                       Timestamp day_start) {
  const bool scam = bernoulli(rng, cfg.scam_rate);
  const Draw d = draw_profile(rng, scam, cfg.spoofed_share);

  // disposition does not depend on the class
  CallEvent::Fields f;
  const double u = uniform01(rng);
  f.user_action = u < 0.45 ? UserAction::Answered : (u < 0.70 ? UserAction::Rejected : UserAction::Ignored);
  f.picked_up = f.user_action == UserAction::Answered;
  f.speak_secs = f.picked_up ? std::min(1.0 + std::exponential_distribution<double>(1.0 / 45.0)(rng), kSpeakCap) : 0.0;
  f.hung_up_by_callee = f.picked_up && bernoulli(rng, 0.35);
  f.timed_out = f.user_action == UserAction::Ignored && bernoulli(rng, 0.6);

  f.region = region;
  f.ring_secs = d.ring;
  f.on_blacklist = d.blacklisted;
  f.timestamp = day_start + d.hour * 3600 + static_cast<Timestamp>(uniform_index(rng, 3600));

  std::string number = "+" + std::string(cc);
  for (int i = 0; i < 9; ++i) number.push_back(static_cast<char>('0' + uniform_index(rng, 10)));
  f.number_hash = hash_identifier(number);

  bool label = rule_of(d);
  if (bernoulli(rng, cfg.label_noise)) label = bernoulli(rng, cfg.scam_rate);
  f.label = label;

  NumberProfile p;
  p.number_hash = f.number_hash;
  p.last_seen = f.timestamp;
  p.first_seen = d.repeat > 1 ? f.timestamp - 3600 - static_cast<Timestamp>(uniform_index(rng, 5 * kDay)) : f.timestamp;
  p.event_count_7d = d.repeat;
  p.regions_seen = {region};
  return {CallEvent(std::move(f)), std::move(p)};
}

}  // namespace

void TrafficConfig::validate() const {
  if (countries.empty()) throw Error(ErrorKind::InvalidValue, "traffic config needs at least one country");
  for (const auto& c : countries)
    if (!dialing_info(c)) throw Error(ErrorKind::UnknownRegion, "no dialing entry for " + c);
  if (days < 1) throw Error(ErrorKind::InvalidValue, "days must be >= 1");
  if (weekday_daily_calls < 0) throw Error(ErrorKind::InvalidValue, "weekday_daily_calls must be >= 0");
  if (!(weekend_ratio > 0.0 && weekend_ratio <= 1.0)) throw Error(ErrorKind::InvalidValue, "weekend_ratio must be in (0,1]");
  if (!(scam_rate > 0.0 && scam_rate < 1.0)) throw Error(ErrorKind::InvalidValue, "scam_rate must be in (0,1)");
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw Error(ErrorKind::InvalidValue, "label_noise must be in [0,1]");
  if (!(spoofed_share >= 0.0 && spoofed_share <= 1.0)) throw Error(ErrorKind::InvalidValue, "spoofed_share must be in [0,1]");
  if (start < 0 || start % kDay != 0) throw Error(ErrorKind::InvalidValue, "start must be a non-negative midnight");
}

Json to_json(const TrafficConfig& c) {
  return {{"countries", c.countries},       {"days", c.days},
          {"weekday_daily_calls", c.weekday_daily_calls}, {"weekend_ratio", c.weekend_ratio},
          {"scam_rate", c.scam_rate},       {"label_noise", c.label_noise},
          {"spoofed_share", c.spoofed_share}, {"start", c.start},
          {"seed", c.seed}};
}

TrafficConfig traffic_config_from_json(const Json& j) {
  TrafficConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorKind::SchemaMismatch, "traffic config must be an object");
    c.countries = j.value("countries", c.countries);
    c.days = j.value("days", c.days);
    c.weekday_daily_calls = j.value("weekday_daily_calls", c.weekday_daily_calls);
    c.weekend_ratio = j.value("weekend_ratio", c.weekend_ratio);
    c.scam_rate = j.value("scam_rate", c.scam_rate);
    c.label_noise = j.value("label_noise", c.label_noise);
    c.spoofed_share = j.value("spoofed_share", c.spoofed_share);
    c.start = j.value("start", c.start);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("traffic config: ") + e.what());
  }
  c.validate();
  return c;
}

bool is_working_hour(int hour) noexcept { return hour >= kWorkStartHour && hour < kWorkEndHour; }

bool is_weekend(Timestamp t) noexcept {
  // 1970-01-01 was a Thursday; Monday-based weekday = (days + 3) % 7
  const auto days = t >= 0 ? t / kDay : (t - kDay + 1) / kDay;
  const auto wd = ((days + 3) % 7 + 7) % 7;
  return wd >= 5;
}

bool scam_rule(const CallEvent& e, const NumberProfile& p) noexcept {
  const int hour = static_cast<int>(((e.timestamp() % kDay) + kDay) % kDay / 3600);
  return (e.ring_secs() < kShortRingSecs && is_working_hour(hour)) ||
         (e.on_blacklist() && p.event_count_7d >= kRepeatThreshold);
}

std::vector<ProfiledCall> generate_call_dataset(const TrafficConfig& cfg) {
  cfg.validate();
  std::vector<ProfiledCall> out;
  for (const auto& country : cfg.countries) {
    const auto cc = dialing_info(country)->country_code;
    for (int day = 0; day < cfg.days; ++day) {
      const Timestamp day_start = cfg.start + day * kDay;
      Rng rng(mix64({cfg.seed, text_key(country), static_cast<std::uint64_t>(day)}));
      const double mean = cfg.weekday_daily_calls * (is_weekend(day_start) ? cfg.weekend_ratio : 1.0);
      const auto count = mean > 0 ? std::poisson_distribution<int>(mean)(rng) : 0;
      for (int i = 0; i < count; ++i) out.push_back(make_call(rng, cfg, country, cc, day_start));
    }
  }
  return out;
}

ProfiledCall scam_archetype(const std::string& region, Timestamp day_start, const std::string& number_hash) {
  CallEvent::Fields f;
  f.number_hash = number_hash;
  f.region = region;
  f.timestamp = day_start + 10 * 3600 + 1234;
  f.ring_secs = 3.0;
  f.user_action = UserAction::Rejected;
  f.on_blacklist = true;
  f.label = true;
  NumberProfile p;
  p.number_hash = number_hash;
  p.first_seen = f.timestamp - 2 * kDay;
  p.last_seen = f.timestamp;
  p.event_count_7d = 6;
  p.regions_seen = {region};
  return {CallEvent(std::move(f)), std::move(p)};
}

}  // namespace scamguard::sim
