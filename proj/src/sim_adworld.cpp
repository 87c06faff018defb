#include "scamguard/sim/adworld.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <random>

#include "scamguard/rng.hpp"

namespace scamguard::sim {

namespace {

constexpr std::string_view kAdPrefix = "http://ads.adnet.example/click?id=";
constexpr double kPixelNoise = 0.05;
constexpr std::uint64_t kNoBucket = ~0ULL;

std::uint64_t text_key(std::string_view s) {
  std::uint64_t h = 0xad5eedULL;
  for (unsigned char c : s) h = mix64(h ^ c);
  return h;
}

double unit_hash(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

void require_url(const AdServerWorld& w, int url_id) {
  if (url_id < 0 || url_id >= w.url_count)
    throw Error(ErrorKind::UnknownUrl, "url id " + std::to_string(url_id) + " is not served by this world");
}

// Geometric patterns; each pixel later gets Gaussian noise and a clamp.
Raster render(AdCategory cat, Rng& rng) {
  const int n = kScreenshotSize;
  Raster img(n, n);
  switch (cat) {
    case AdCategory::Benign:
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img(r, c) = uniform01(rng);
      break;
    case AdCategory::FakeInfectionAlert: {
      const double hi = uniform(rng, 0.75, 0.9), lo = uniform(rng, 0.1, 0.25);
      const int phase = static_cast<int>(uniform_index(rng, 2));
      for (int r = 0; r < n; ++r) img.row(r).setConstant(((r + phase) / 4) % 2 == 0 ? hi : lo);
      break;
    }
    case AdCategory::FakeSystemUpdate: {
      const double bg = uniform(rng, 0.1, 0.2), fg = uniform(rng, 0.8, 0.95);
      const int size = 14 + static_cast<int>(uniform_index(rng, 5));
      const int r0 = (n - size) / 2 + static_cast<int>(uniform_index(rng, 3)) - 1;
      const int c0 = (n - size) / 2 + static_cast<int>(uniform_index(rng, 3)) - 1;
      img.setConstant(bg);
      img.block(r0, c0, size, size).setConstant(fg);
      break;
    }
    case AdCategory::FakeVulnerabilityPatch: {
      const double hi = uniform(rng, 0.75, 0.9), lo = uniform(rng, 0.1, 0.25);
      const int phase = static_cast<int>(uniform_index(rng, 2));
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img(r, c) = ((r + c + phase) / 4) % 2 == 0 ? hi : lo;
      break;
    }
  }
  std::normal_distribution<double> noise(0.0, kPixelNoise);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) img(r, c) = std::clamp(img(r, c) + noise(rng), 0.0, 1.0);
  return img;
}

std::string_view attention_word(std::string_view language) {
  if (language.starts_with("de")) return "Achtung";
  if (language.starts_with("it")) return "Attenzione";
  if (language.starts_with("fr")) return "Alerte";
  if (language.starts_with("pt") || language.starts_with("es")) return "Alerta";
  return "Attention";
}

std::string page_text(AdCategory cat, std::string_view language, int url_id, Rng& rng) {
  const auto word = std::string(attention_word(language));
  const int count = 2 + static_cast<int>(uniform_index(rng, 4));
  switch (cat) {
    case AdCategory::Benign: {
      static constexpr std::array<std::string_view, 4> lines = {
          "Summer travel deals with free shipping on every order",
          "Read the latest sports news and weather for your city",
          "Discount music and video streaming offer for new members",
          "Try this week's recipe and shop the kitchen sale",
      };
      return std::string(lines[static_cast<std::size_t>(url_id) % lines.size()]);
    }
    case AdCategory::FakeInfectionAlert:
      return word + "! Your phone is infected with " + std::to_string(count) +
             " viruses. Remove the virus now and scan your device before the battery is damaged.";
    case AdCategory::FakeSystemUpdate:
      return word + ": system update required. Your Android version is outdated. Install the update today, " +
             std::to_string(count) + " minutes left.";
    case AdCategory::FakeVulnerabilityPatch:
      return word + ": critical security vulnerability detected. Download the patch to fix this exploit immediately (" +
             std::to_string(count) + " threats).";
  }
  return {};
}

std::string store_destination(int url_id, AdCategory cat) {
  static constexpr std::array<std::string_view, 3> apps = {"cleaner", "booster", "security"};
  return "https://play.google.com/store/apps/details?id=com." +
         std::string(apps[static_cast<std::size_t>(to_code(cat) - 1)]) + ".app" + std::to_string(url_id % 17);
}

std::string page_html(AdCategory cat, const std::string& text, const std::string& dest, std::int64_t bucket) {
  if (cat == AdCategory::Benign)
    return "<html><body><p>" + text + "</p><a href=\"" + dest + "\">Shop now</a></body></html>";
  const auto tracker = "http://t" + std::to_string(bucket % 97) + ".fluxcdn.example/pixel";
  return "<html><head><meta http-equiv=\"refresh\" content=\"8;url=" + dest + "\"><script>setTimeout(function(){window.open('" +
         dest + "')},3000)</script></head><body onclick=\"window.open('" + dest + "')\"><h1>" + text +
         "</h1><div style=\"display:none\">" + std::to_string(bucket) + "</div><iframe src=\"" + tracker +
         "\"></iframe><a href=\"" + dest + "\">Install</a></body></html>";
}

}  // namespace

std::vector<RegionContext> AdServerWorld::default_regions() {
  return {{"US", "en-US", 0}, {"IN", "en-IN", 0}, {"TW", "zh-TW", 0}, {"BR", "pt-BR", 0},
          {"IT", "it-IT", 0}, {"GB", "en-GB", 0}, {"FR", "fr-FR", 0}, {"DE", "de-DE", 0}};
}

void AdServerWorld::validate() const {
  if (url_count < 1) throw Error(ErrorKind::InvalidValue, "url_count must be >= 1");
  if (!(deceptive_fraction >= 0.0 && deceptive_fraction <= 1.0))
    throw Error(ErrorKind::InvalidValue, "deceptive_fraction must be in [0,1]");
  if (flux_bucket_hours < 1) throw Error(ErrorKind::InvalidValue, "flux_bucket_hours must be >= 1");
  if (regions.empty()) throw Error(ErrorKind::InvalidValue, "world needs at least one region");
  for (const auto& r : regions) r.validate();
}

const RegionContext* AdServerWorld::find_region(std::string_view region) const {
  auto it = std::find_if(regions.begin(), regions.end(), [&](const RegionContext& r) { return r.region == region; });
  return it == regions.end() ? nullptr : &*it;
}

Json to_json(const AdServerWorld& w) {
  Json regions = Json::array();
  for (const auto& r : w.regions) regions.push_back({{"region", r.region}, {"language", r.language}});
  return {{"url_count", w.url_count},
          {"regions", regions},
          {"deceptive_fraction", w.deceptive_fraction},
          {"flux_bucket_hours", w.flux_bucket_hours},
          {"seed", w.seed}};
}

AdServerWorld ad_world_from_json(const Json& j) {
  AdServerWorld w;
  try {
    if (!j.is_object()) throw Error(ErrorKind::SchemaMismatch, "world config must be an object");
    w.url_count = j.value("url_count", w.url_count);
    w.deceptive_fraction = j.value("deceptive_fraction", w.deceptive_fraction);
    w.flux_bucket_hours = j.value("flux_bucket_hours", w.flux_bucket_hours);
    w.seed = j.value("seed", w.seed);
    if (j.contains("regions")) {
      w.regions.clear();
      for (const auto& r : j.at("regions"))
        w.regions.push_back({r.at("region").get<std::string>(), r.at("language").get<std::string>(), 0});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, std::string("world config: ") + e.what());
  }
  w.validate();
  return w;
}

std::string ad_url(int url_id) { return std::string(kAdPrefix) + std::to_string(url_id); }

std::optional<int> parse_ad_url(std::string_view url) {
  std::string canon;
  try {
    canon = canonicalize_url(url);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (!std::string_view(canon).starts_with(kAdPrefix)) return std::nullopt;
  std::string_view digits = std::string_view(canon).substr(kAdPrefix.size());
  int id = 0;
  auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
  if (ec != std::errc{} || end != digits.data() + digits.size() || digits.empty() || id < 0) return std::nullopt;
  if (ad_url(id) != canon) return std::nullopt;  // reject leading zeros etc.
  return id;
}

bool is_deceptive_url(const AdServerWorld& w, int url_id) {
  require_url(w, url_id);
  return unit_hash(mix64({w.seed, 0xdecULL, static_cast<std::uint64_t>(url_id)})) < w.deceptive_fraction;
}

AdCategory template_for(const AdServerWorld& w, int url_id, std::string_view region, std::int64_t time_bucket) {
  if (!is_deceptive_url(w, url_id)) return AdCategory::Benign;
  const auto offset = mix64({w.seed, 0x0ffULL, static_cast<std::uint64_t>(url_id), text_key(region)}) % 3;
  const auto slot = (static_cast<std::int64_t>(offset) + time_bucket % 3 + 3) % 3;
  return ad_category_from_code(1 + static_cast<int>(slot));
}

AdCapture serve_ad(const AdServerWorld& w, int url_id, const RegionContext& ctx) {
  require_url(w, url_id);
  ctx.validate();
  const AdCategory cat = template_for(w, url_id, ctx.region, ctx.time_bucket);
  const bool benign = cat == AdCategory::Benign;
  const std::uint64_t bucket_key = benign ? kNoBucket : static_cast<std::uint64_t>(ctx.time_bucket);
  Rng rng(mix64({w.seed, static_cast<std::uint64_t>(url_id), text_key(ctx.region), text_key(ctx.language), bucket_key}));

  AdCapture cap;
  cap.original_url = ad_url(url_id);
  cap.destination_url = benign ? "https://shop" + std::to_string(url_id) + ".example.com/landing"
                               : store_destination(url_id, cat);
  cap.redirect_chain.push_back(cap.original_url);
  if (!benign)
    cap.redirect_chain.push_back("http://r" + std::to_string(ctx.time_bucket % 97) + ".fluxcdn.example/go?u=" +
                                 std::to_string(url_id));
  cap.redirect_chain.push_back(cap.destination_url);
  cap.screenshot = render(cat, rng);
  cap.page_text = page_text(cat, ctx.language, url_id, rng);
  cap.html = page_html(cat, cap.page_text, cap.destination_url, ctx.time_bucket);
  cap.captured_at = ctx.time_bucket * w.flux_bucket_hours * 3600;
  cap.context = ctx;
  cap.label = cat;

  char id[40];
  std::snprintf(id, sizeof id, "cap-%016llx",
                static_cast<unsigned long long>(mix64({w.seed, static_cast<std::uint64_t>(url_id), text_key(ctx.region),
                                                       text_key(ctx.language),
                                                       static_cast<std::uint64_t>(ctx.time_bucket)})));
  cap.capture_id = id;
  return cap;
}

std::vector<AdCapture> fetch_from_regions(const AdServerWorld& w, int url_id, std::span<const std::string> regions,
                                          Timestamp at) {
  require_url(w, url_id);
  if (regions.empty()) throw Error(ErrorKind::InvalidValue, "fetch needs at least one region");
  const auto bucket = time_bucket_of(at, w.flux_bucket_hours);
  std::vector<RegionContext> contexts;
  for (const auto& r : regions) {
    const auto* tpl = w.find_region(r);
    if (!tpl) throw Error(ErrorKind::UnknownRegion, "region " + r + " is not part of the world");
    contexts.push_back({tpl->region, tpl->language, bucket});
  }
  std::vector<AdCapture> out;
  for (const auto& ctx : contexts) out.push_back(serve_ad(w, url_id, ctx));
  return out;
}

std::vector<AdCapture> generate_ad_corpus(const AdServerWorld& w, int n_per_class, std::uint64_t seed) {
  w.validate();
  if (n_per_class < 1) throw Error(ErrorKind::InvalidValue, "n_per_class must be >= 1");
  bool any_benign = false, any_deceptive = false;
  for (int u = 0; u < w.url_count && !(any_benign && any_deceptive); ++u)
    (is_deceptive_url(w, u) ? any_deceptive : any_benign) = true;
  if (!any_benign || !any_deceptive)
    throw Error(ErrorKind::InvalidValue, "world must contain both benign and deceptive urls for a balanced corpus");

  constexpr std::int64_t kBuckets = 28 * 4;
  Rng rng(mix64({seed, 0xc0ffeeULL}));
  std::array<int, kAdCategoryCount> counts{};
  std::vector<AdCapture> out;
  out.reserve(static_cast<std::size_t>(n_per_class) * kAdCategoryCount);
  while (out.size() < static_cast<std::size_t>(n_per_class) * kAdCategoryCount) {
    const int url = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(w.url_count)));
    const auto& tpl = w.regions[uniform_index(rng, w.regions.size())];
    const auto bucket = static_cast<std::int64_t>(uniform_index(rng, kBuckets));
    const auto cat = template_for(w, url, tpl.region, bucket);
    auto& k = counts[static_cast<std::size_t>(to_code(cat))];
    if (k >= n_per_class) continue;
    ++k;
    out.push_back(serve_ad(w, url, {tpl.region, tpl.language, bucket}));
  }
  return out;
}

}  // namespace scamguard::sim
