#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scamguard/domain.hpp"

namespace scamguard::sim {

/// Region-aware, fast-fluxing ad server.
///
/// A URL is deceptive when its seeded hash falls below `deceptive_fraction`.
/// Deceptive URLs pick one of the three deceptive templates from
/// (region offset + time bucket) mod 3, so the schedule has period 3 in the
/// bucket and a per-(url, region) phase. Benign URLs ignore the bucket.
struct AdServerWorld {
  int url_count = 500;
  std::vector<RegionContext> regions = default_regions();
  double deceptive_fraction = 0.21;
  int flux_bucket_hours = 6;
  std::uint64_t seed = 7;

  void validate() const;
  const RegionContext* find_region(std::string_view region) const;

  static std::vector<RegionContext> default_regions();
};

Json to_json(const AdServerWorld& w);
AdServerWorld ad_world_from_json(const Json& j);

std::string ad_url(int url_id);
/// Inverse of ad_url after canonicalization; nullopt for foreign URLs.
std::optional<int> parse_ad_url(std::string_view url);

bool is_deceptive_url(const AdServerWorld& w, int url_id);

/// Template served for (url, region, bucket). Pure, no rendering.
AdCategory template_for(const AdServerWorld& w, int url_id, std::string_view region, std::int64_t time_bucket);

/// Throws UnknownUrl when url_id is outside [0, url_count).
AdCapture serve_ad(const AdServerWorld& w, int url_id, const RegionContext& ctx);

/// One capture per region (looked up in w.regions) at the bucket containing `at`.
std::vector<AdCapture> fetch_from_regions(const AdServerWorld& w, int url_id, std::span<const std::string> regions,
                                          Timestamp at);

/// Balanced 4-class corpus in draw order.
std::vector<AdCapture> generate_ad_corpus(const AdServerWorld& w, int n_per_class, std::uint64_t seed);

}  // namespace scamguard::sim
