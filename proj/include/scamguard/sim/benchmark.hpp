#pragma once

// End-to-end desk benchmarks: split, train every method, score per country.
// Models are trained on the pooled training part of all countries and
// evaluated separately on each country's held-out part.

#include <string>
#include <utility>
#include <vector>

#include "scamguard/baselines.hpp"
#include "scamguard/features.hpp"
#include "scamguard/nn/training.hpp"
#include "scamguard/sim/evaluation.hpp"

namespace scamguard::sim {

struct NamedClassifier {
  std::string method;
  baselines::Classifier model;
};

struct NamedOneVsRest {
  std::string method;
  baselines::OneVsRest model;
};

// ---- calls ----

struct CallsBenchmarkConfig {
  nn::TrainConfig dnn = default_dnn_config();
  baselines::LogRegOptions logreg;
  baselines::TreeOptions tree;
  baselines::ForestOptions forest;
  baselines::SvmOptions svm;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;

  static nn::TrainConfig default_dnn_config();
};

struct CallsSplit {
  std::vector<ProfiledCall> train, test;
};

/// Stratified by (country, label).
CallsSplit split_calls(const std::vector<ProfiledCall>& data, double test_fraction, std::uint64_t seed);

/// Rows are samples.
Eigen::MatrixXd call_feature_matrix(std::span<const ProfiledCall> calls, const ScalingSpec& scaling);
std::vector<int> call_labels(std::span<const ProfiledCall> calls);

struct CallModels {
  ScalingSpec scaling;
  nn::DnnModel dnn;
  nn::TrainHistory history;
  std::vector<NamedClassifier> baselines;  // logreg, tree, forest, svm
};

CallModels train_call_models(const std::vector<ProfiledCall>& train, const CallsBenchmarkConfig& cfg);
/// Only the baselines (dnn left at zeros).
std::vector<NamedClassifier> train_call_baselines(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                                  const CallsBenchmarkConfig& cfg);

CountrySummary evaluate_call_models(const CallModels& models, const std::vector<ProfiledCall>& test);

CountrySummary run_calls_benchmark(const std::vector<ProfiledCall>& data, const CallsBenchmarkConfig& cfg);

// ---- ads ----

struct AdsBenchmarkConfig {
  nn::TrainConfig cnn = default_cnn_config();
  baselines::LogRegOptions logreg;
  baselines::TreeOptions tree;
  baselines::ForestOptions forest;
  baselines::SvmOptions svm;
  double test_fraction = 0.2;
  std::uint64_t seed = 7;

  static nn::TrainConfig default_cnn_config();
};

struct AdsSplit {
  std::vector<AdCapture> train, test;
};

/// Stratified by label.
AdsSplit split_ads(const std::vector<AdCapture>& corpus, double test_fraction, std::uint64_t seed);

std::vector<int> ad_labels(std::span<const AdCapture> captures);
std::vector<Raster> ad_images(std::span<const AdCapture> captures);
/// Flattened feature bundles (bundled lexicon), rows are samples.
Eigen::MatrixXd ad_feature_matrix(std::span<const AdCapture> captures);

struct AdModels {
  nn::CnnModel cnn;
  nn::TrainHistory history;
  std::vector<NamedOneVsRest> baselines;
};

AdModels train_ad_models(const std::vector<AdCapture>& train, const AdsBenchmarkConfig& cfg);
std::vector<NamedOneVsRest> train_ad_baselines(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                               const AdsBenchmarkConfig& cfg);

int cnn_predict_class(const nn::CnnModel& model, const Raster& image);

CountrySummary evaluate_ad_models(const AdModels& models, const std::vector<AdCapture>& test);

CountrySummary run_ads_benchmark(const std::vector<AdCapture>& corpus, const AdsBenchmarkConfig& cfg);

}  // namespace scamguard::sim
