#include <gtest/gtest.h>

#include <random>

#include "scamguard/features.hpp"

using namespace scamguard;

namespace {

const std::string kHash = hash_identifier("+15550100000");

CallEvent make_event(double ring, double speak, UserAction act, Timestamp at, bool blacklist = false) {
  CallEvent::Fields f;
  f.number_hash = kHash;
  f.region = "US";
  f.timestamp = at;
  f.ring_secs = ring;
  f.speak_secs = speak;
  f.user_action = act;
  f.picked_up = act == UserAction::Answered;
  f.on_blacklist = blacklist;
  return CallEvent(f);
}

NumberProfile profile(std::int64_t count) { return {kHash, 0, 10, count, {"US"}}; }

AdCapture capture_with(std::string text, std::string html) {
  AdCapture c;
  c.capture_id = "cap-test";
  c.original_url = "http://ads.example/x";
  c.destination_url = c.original_url;
  c.redirect_chain = {c.original_url};
  c.screenshot = Raster::Constant(kScreenshotSize, kScreenshotSize, 0.25);
  c.page_text = std::move(text);
  c.html = std::move(html);
  c.context = {"US", "en-US", 0};
  return c;
}

}  // namespace

TEST(CallFeatures, RawValuesFollowFixedOrder) {
  // 14:00 UTC, answered, 30s ring, 12s talk
  const auto e = make_event(30, 12, UserAction::Answered, 1467590400 + 14 * 3600, true);
  const CallVector v = raw_call_features(e, profile(3));
  CallVector expect;
  expect << 30, 12, 1.0, 0, 1, 0, 1, 14.0 / 23.0, 3;
  EXPECT_EQ(v, expect);
}

TEST(CallFeatures, MinMaxScaling) {
  const ScalingSpec s(CallVector::Constant(10), CallVector::Constant(50));
  const CallVector out = s.apply(CallVector::Constant(30));
  for (int i = 0; i < kCallFeatureDim; ++i) EXPECT_DOUBLE_EQ(out[i], 0.5);
  EXPECT_EQ(s.apply(CallVector::Constant(99)), CallVector::Ones());
  EXPECT_EQ(s.apply(CallVector::Constant(-5)), CallVector::Zero());

  CallVector lo = CallVector::Zero(), hi = CallVector::Ones();
  hi[kRing] = 0;  // degenerate dimension
  EXPECT_EQ(ScalingSpec(lo, hi).apply(CallVector::Constant(0.7))[kRing], 0.0);

  EXPECT_THROW(ScalingSpec(CallVector::Ones(), CallVector::Zero()), Error);
}

TEST(CallFeatures, FitScalingUsesCorpusRange) {
  std::vector<ProfiledCall> corpus = {
      {make_event(10, 0, UserAction::Rejected, 0), profile(1)},
      {make_event(50, 20, UserAction::Answered, 0), profile(7)},
      {make_event(25, 5, UserAction::Answered, 0), profile(2)},
  };
  const auto s = fit_scaling(corpus);
  EXPECT_EQ(s.min()[kRing], 10);
  EXPECT_EQ(s.max()[kRing], 50);
  EXPECT_EQ(s.max()[kSpeak], 20);
  EXPECT_EQ(s.min()[kRepeat], 1);
  EXPECT_EQ(s.max()[kRepeat], 7);
  EXPECT_EQ(s.min()[kHour], 0);
  EXPECT_EQ(s.max()[kHour], 1);

  const auto v = extract_call_features(make_event(30, 10, UserAction::Answered, 0), profile(4), s);
  EXPECT_DOUBLE_EQ(v.values[kRing], 0.5);
  EXPECT_DOUBLE_EQ(v.values[kSpeak], 0.5);
  EXPECT_DOUBLE_EQ(v.values[kRepeat], 0.5);

  EXPECT_THROW(fit_scaling(std::span<const ProfiledCall>{}), Error);
}

TEST(CallFeatures, ProfileMustMatchNumber) {
  NumberProfile other{hash_identifier("+15550100001"), 0, 0, 1, {}};
  try {
    extract_call_features(make_event(1, 0, UserAction::Ignored, 0), other, ScalingSpec::identity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ProfileMismatch);
  }
}

TEST(CallFeatures, ScaledValuesStayInUnitInterval) {
  std::mt19937_64 rng(21);
  std::exponential_distribution<double> ring(1.0 / 20), speak(1.0 / 40);
  std::vector<ProfiledCall> corpus;
  for (int i = 0; i < 1000; ++i) {
    const auto act = static_cast<UserAction>(rng() % 3);
    const double talk = act == UserAction::Answered ? speak(rng) : 0.0;
    corpus.push_back({make_event(ring(rng), talk, act, static_cast<Timestamp>(rng() % 10'000'000)),
                      profile(static_cast<std::int64_t>(rng() % 12))});
  }
  const auto s = fit_scaling(corpus);
  for (const auto& c : corpus) {
    const auto v = extract_call_features(c.event, c.profile, s).values;
    EXPECT_TRUE(v.allFinite());
    EXPECT_GE(v.minCoeff(), 0.0);
    EXPECT_LE(v.maxCoeff(), 1.0);
  }
}

TEST(AdFeatures, TextSignalsAreKeywordFractions) {
  const auto b = extract_ad_features(capture_with("Virus, virus ALERT", ""), Lexicon::bundled());
  EXPECT_DOUBLE_EQ(b.text_signals[0], 2.0 / 3.0);  // infection group
  EXPECT_DOUBLE_EQ(b.text_signals[4], 1.0 / 3.0);  // alert group
  EXPECT_EQ((b.text_signals.array() > 0).count(), 2);

  const auto empty = extract_ad_features(capture_with("", ""), Lexicon::bundled());
  EXPECT_EQ(empty.text_signals, decltype(empty.text_signals)::Zero());
}

TEST(AdFeatures, HtmlSignalsSquashCounts) {
  const auto one_script = extract_ad_features(capture_with("", "<script>x()</script>"), Lexicon::bundled());
  EXPECT_DOUBLE_EQ(one_script.html_signals[0], 0.5);

  const std::string html =
      R"html(<meta http-equiv="refresh" content="0;url=http://b.example/"><script></script><script></script>)html"
      R"html(<iframe src="http://c.example/f"></iframe><div style="display:none" onclick="window.open('x')"></div>)html"
      R"html(<a href="https://play.google.com/store/apps/details?id=q">get</a><img src="http://ads.example/i.png">)html";
  const auto counts = html_structure_counts(html, "ads.example");
  const std::array<int, kHtmlSignalDim> expect = {2, 1, 2, 1, 1, 1, 1, 1};
  EXPECT_EQ(counts, expect);
}

TEST(AdFeatures, RejectsBadScreenshots) {
  auto c = capture_with("", "");
  c.screenshot = Raster::Zero(31, 32);
  EXPECT_THROW(extract_ad_features(c, Lexicon::bundled()), Error);
  c.screenshot = Raster::Constant(32, 32, 1.5);
  EXPECT_THROW(extract_ad_features(c, Lexicon::bundled()), Error);
}

TEST(AdFeatures, FlattenRoundTrip) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  AdFeatureBundle b;
  for (int i = 0; i < kScreenshotSize; ++i)
    for (int j = 0; j < kScreenshotSize; ++j) b.image(i, j) = u(rng);
  for (int i = 0; i < kTextSignalDim; ++i) b.text_signals[i] = u(rng);
  for (int i = 0; i < kHtmlSignalDim; ++i) b.html_signals[i] = u(rng);
  const Eigen::VectorXd flat = flatten_bundle(b);
  ASSERT_EQ(flat.size(), 1048);
  EXPECT_EQ(flat[1 * kScreenshotSize + 2], b.image(1, 2));
  EXPECT_EQ(flat[1024], b.text_signals[0]);
  EXPECT_EQ(flat[1040], b.html_signals[0]);
  EXPECT_EQ(unflatten_bundle(flat), b);
  EXPECT_THROW(unflatten_bundle(Eigen::VectorXd::Zero(1047)), Error);
}

TEST(Json, ScalingAndLexiconRoundTrip) {
  CallVector lo = CallVector::Zero(), hi = CallVector::Ones();
  lo[kRing] = 0.1;
  hi[kRing] = 117.33333333333333;
  const ScalingSpec s(lo, hi);
  EXPECT_EQ(scaling_spec_from_json(Json::parse(to_json(s).dump())), s);

  const auto lex = lexicon_from_json(to_json(Lexicon::bundled()));
  ASSERT_EQ(lex.groups.size(), 16u);
  EXPECT_EQ(lex.groups[0].words, Lexicon::bundled().groups[0].words);
}
