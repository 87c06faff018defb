#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "scamguard/service/event_log.hpp"
#include "scamguard/service/registry.hpp"
#include "scamguard/sim/adworld.hpp"

namespace scamguard::service {

/// Where ad captures come from. The simulator is the bundled implementation;
/// a real multi-vantage fetcher would implement the same interface.
class CaptureSource {
 public:
  virtual ~CaptureSource() = default;
  virtual bool knows_region(std::string_view region) const = 0;
  /// `canonical_url` is already canonicalized. Throws UnknownUrl for URLs the
  /// source cannot fetch.
  virtual std::vector<AdCapture> fetch(const std::string& canonical_url, std::span<const std::string> regions,
                                       Timestamp at) = 0;
};

class SimulatedCaptureSource final : public CaptureSource {
 public:
  explicit SimulatedCaptureSource(sim::AdServerWorld world);
  bool knows_region(std::string_view region) const override;
  std::vector<AdCapture> fetch(const std::string& canonical_url, std::span<const std::string> regions,
                               Timestamp at) override;

 private:
  sim::AdServerWorld world_;
};

struct AnalysisReport {
  std::string report_id;
  std::string original_url;
  std::string destination_url;
  std::string screenshot_ref;  // relative to the data directory
  Timestamp captured_at = 0;
  std::string region;
  Verdict verdict;

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

Json to_json(const AnalysisReport& r);
AnalysisReport analysis_report_from_json(const Json& j);

/// Portable greymap (binary P5, 8-bit).
std::string encode_pgm(const Raster& img);
Raster decode_pgm(std::string_view bytes);

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::size_t defense_top_n = 1000;
  std::function<Timestamp()> clock;  // defaults to the system clock
};

/// Transport-independent reply: HTTP status and response body.
struct Reply {
  int status = 200;
  std::string body;
};

/// The cloud-side detector. All state lives in the data directory:
///   models/<kind>/<version>.json, events.log, reports/<id>.json, screenshots/<id>.pgm
/// and the in-memory indexes are rebuilt from events.log on construction.
class DetectionService {
 public:
  DetectionService(ServiceConfig cfg, std::shared_ptr<CaptureSource> source);

  Reply call_feedback(std::string_view body);
  Reply number_lookup(std::string_view hash) const;
  Reply submit_ad(std::string_view body);
  Reply ad_report(std::string_view id) const;
  Reply model_version() const;
  Reply activate(std::string_view body);
  Reply client_defense(std::optional<std::size_t> top_n = std::nullopt) const;

  ModelRegistry& registry() noexcept { return registry_; }
  const EventLog& log() const noexcept { return log_; }
  const std::filesystem::path& data_dir() const noexcept { return cfg_.data_dir; }

 private:
  struct NumberState {
    NumberProfile profile;
    std::vector<Timestamp> seen;  // sorted event timestamps, pruned to the 7-day window
    std::optional<Verdict> latest;
    std::int64_t scam_verdicts = 0;
  };

  void replay(const std::vector<LogRecord>& records);
  void apply_call(const CallEvent& event, const Verdict& verdict);
  void apply_activation(ModelKind kind, const std::string& version);
  NumberProfile updated_profile(const CallEvent& event) const;
  std::mutex& stripe(std::string_view hash);

  ServiceConfig cfg_;
  std::shared_ptr<CaptureSource> source_;
  ModelRegistry registry_;
  EventLog log_;

  mutable std::shared_mutex state_mu_;  // guards the maps below
  std::map<std::string, NumberState> numbers_;
  std::map<std::string, std::string> reports_;  // id -> serialized report
  std::uint64_t report_counter_ = 0;

  std::array<std::mutex, 64> stripes_;
  std::mutex ads_mu_;
  std::mutex activation_mu_;
};

}  // namespace scamguard::service
