#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scamguard/domain.hpp"

namespace scamguard {

inline constexpr int kCallFeatureDim = 9;
inline constexpr int kTextSignalDim = 16;
inline constexpr int kHtmlSignalDim = 8;
inline constexpr int kAdFlatDim = kScreenshotSize * kScreenshotSize + kTextSignalDim + kHtmlSignalDim;

using CallVector = Eigen::Matrix<double, kCallFeatureDim, 1>;

// Feature order is part of the model contract:
//   0 ring_secs, 1 speak_secs, 2 user_action, 3 hung_up_by_callee, 4 picked_up,
//   5 timed_out, 6 on_blacklist, 7 hour of day, 8 seven-day repeat count.
enum CallFeature : int {
  kRing = 0,
  kSpeak,
  kUserAction,
  kHungUp,
  kPickedUp,
  kTimedOut,
  kBlacklist,
  kHour,
  kRepeat,
};

struct CallFeatureVector {
  CallVector values = CallVector::Zero();
  friend bool operator==(const CallFeatureVector&, const CallFeatureVector&) = default;
};

/// Per-dimension (min, max) ranges used for min-max scaling.
class ScalingSpec {
 public:
  ScalingSpec();  // identity: every dimension (0, 1)
  ScalingSpec(const CallVector& min, const CallVector& max);

  static ScalingSpec identity() { return {}; }

  const CallVector& min() const noexcept { return min_; }
  const CallVector& max() const noexcept { return max_; }

  /// Scale raw values into [0,1]; degenerate dimensions (max == min) map to 0.
  CallVector apply(const CallVector& raw) const;

  friend bool operator==(const ScalingSpec&, const ScalingSpec&) = default;

 private:
  CallVector min_, max_;
};

/// Unscaled 9-vector; user action, flags and hour are already coded into [0,1].
CallVector raw_call_features(const CallEvent& event, const NumberProfile& profile);

CallFeatureVector extract_call_features(const CallEvent& event, const NumberProfile& profile,
                                        const ScalingSpec& scaling);

struct ProfiledCall {
  CallEvent event;
  NumberProfile profile;
};

ScalingSpec fit_scaling(std::span<const ProfiledCall> corpus);

/// Keyword groups for text signals; exactly 16 groups.
struct Lexicon {
  struct Group {
    std::string name;
    std::vector<std::string> words;
  };
  std::vector<Group> groups;

  static const Lexicon& bundled();
};

struct AdFeatureBundle {
  Raster image = Raster::Zero(kScreenshotSize, kScreenshotSize);
  Eigen::Matrix<double, kTextSignalDim, 1> text_signals = decltype(text_signals)::Zero();
  Eigen::Matrix<double, kHtmlSignalDim, 1> html_signals = decltype(html_signals)::Zero();
  friend bool operator==(const AdFeatureBundle&, const AdFeatureBundle&) = default;
};

/// Lowercased ASCII alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// 8 structural counts in fixed order: script tags, meta refreshes, external
/// domains, iframes, onclick handlers, hidden elements, popup calls, store links.
std::array<int, kHtmlSignalDim> html_structure_counts(std::string_view html, std::string_view page_host);

AdFeatureBundle extract_ad_features(const AdCapture& capture, const Lexicon& lexicon);

/// Row-major pixels, then text signals, then html signals (1048 values).
Eigen::VectorXd flatten_bundle(const AdFeatureBundle& bundle);
AdFeatureBundle unflatten_bundle(const Eigen::Ref<const Eigen::VectorXd>& flat);

Json to_json(const ScalingSpec& s);
ScalingSpec scaling_spec_from_json(const Json& j);
Json to_json(const Lexicon& lexicon);
Lexicon lexicon_from_json(const Json& j);

}  // namespace scamguard
