#include "scamguard/sim/synthetic.hpp"

#include <algorithm>
#include <random>

#include "scamguard/rng.hpp"

namespace scamguard::sim {

namespace {

struct Blob {
  double cx, cy;
  int label;
};

baselines::Dataset sample_blobs(const std::vector<Blob>& blobs, int n, double sigma, std::uint64_t seed) {
  if (n < 1 || n % static_cast<int>(blobs.size()) != 0)
    throw Error(ErrorKind::InvalidValue, "n must be a positive multiple of the blob count");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  baselines::Dataset d{Eigen::MatrixXd(n, 2), {}};
  const int per = n / static_cast<int>(blobs.size());
  int row = 0;
  for (const auto& b : blobs)
    for (int i = 0; i < per; ++i, ++row) {
      d.x(row, 0) = std::clamp(b.cx + noise(rng), 0.0, 1.0);
      d.x(row, 1) = std::clamp(b.cy + noise(rng), 0.0, 1.0);
      d.y.push_back(b.label);
    }
  return d;
}

}  // namespace

baselines::Dataset make_xor_dataset(int n, std::uint64_t seed) {
  return sample_blobs({{0.25, 0.25, 0}, {0.75, 0.75, 0}, {0.25, 0.75, 1}, {0.75, 0.25, 1}}, n, 0.08, seed);
}

baselines::Dataset make_two_clusters(int n, std::uint64_t seed) {
  return sample_blobs({{0.25, 0.25, 0}, {0.75, 0.75, 1}}, n, 0.05, seed);
}

baselines::Dataset pad_features(const baselines::Dataset& d, Eigen::Index dim) {
  if (dim < d.dim()) throw Error(ErrorKind::DimensionMismatch, "cannot pad to a smaller dimension");
  baselines::Dataset out{Eigen::MatrixXd::Zero(d.x.rows(), dim), d.y};
  out.x.leftCols(d.dim()) = d.x;
  return out;
}

}  // namespace scamguard::sim
