#pragma once

// Small 2-D toy sets for model sanity checks.

#include <cstdint>

#include "scamguard/baselines.hpp"

namespace scamguard::sim {

/// Four Gaussian blobs (sigma 0.08, clamped to [0,1]) at the corners
/// (0.25|0.75, 0.25|0.75); label 1 on the anti-diagonal corners. n/4 points
/// per blob (n must be a multiple of 4).
baselines::Dataset make_xor_dataset(int n, std::uint64_t seed);

/// Two blobs at (0.25, 0.25) -> 0 and (0.75, 0.75) -> 1, sigma 0.05, n/2 each.
baselines::Dataset make_two_clusters(int n, std::uint64_t seed);

/// Appends zero columns up to `dim` (e.g. to feed 2-D sets to the 9-input DNN).
baselines::Dataset pad_features(const baselines::Dataset& d, Eigen::Index dim);

}  // namespace scamguard::sim
