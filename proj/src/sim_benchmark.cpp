#include "scamguard/sim/benchmark.hpp"

#include <map>

namespace scamguard::sim {

namespace {

template <typename T>
std::vector<T> pick(const std::vector<T>& xs, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(xs[i]);
  return out;
}

}  // namespace

nn::TrainConfig CallsBenchmarkConfig::default_dnn_config() {
  nn::TrainConfig c;
  c.learning_rate = 0.05;
  c.epochs = 150;
  c.batch_size = 32;
  c.seed = 7;
  c.early_stop_patience = 15;
  return c;
}

nn::TrainConfig AdsBenchmarkConfig::default_cnn_config() {
  nn::TrainConfig c;
  c.learning_rate = 0.05;
  c.epochs = 40;
  c.batch_size = 16;
  c.seed = 7;
  c.early_stop_patience = 5;
  return c;
}

CallsSplit split_calls(const std::vector<ProfiledCall>& data, double test_fraction, std::uint64_t seed) {
  std::map<std::string, int> country_ids;
  std::vector<int> strata;
  strata.reserve(data.size());
  for (const auto& c : data) {
    auto [it, _] = country_ids.emplace(c.event.region(), static_cast<int>(country_ids.size()));
    strata.push_back(it->second * 2 + (c.event.label().value_or(false) ? 1 : 0));
  }
  auto s = stratified_split(strata, test_fraction, seed);
  return {pick(data, s.train), pick(data, s.test)};
}

Eigen::MatrixXd call_feature_matrix(std::span<const ProfiledCall> calls, const ScalingSpec& scaling) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(calls.size()), kCallFeatureDim);
  for (std::size_t i = 0; i < calls.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = extract_call_features(calls[i].event, calls[i].profile, scaling).values.transpose();
  return x;
}

std::vector<int> call_labels(std::span<const ProfiledCall> calls) {
  std::vector<int> y;
  y.reserve(calls.size());
  for (const auto& c : calls) {
    if (!c.event.label()) throw Error(ErrorKind::InvalidValue, "benchmark calls must be labeled");
    y.push_back(*c.event.label() ? 1 : 0);
  }
  return y;
}

std::vector<NamedClassifier> train_call_baselines(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                                  const CallsBenchmarkConfig& cfg) {
  const baselines::Dataset data{x, y};
  auto logreg = cfg.logreg;
  logreg.seed = cfg.seed;
  auto forest = cfg.forest;
  forest.seed = cfg.seed;
  auto svm = cfg.svm;
  svm.seed = cfg.seed;
  std::vector<NamedClassifier> out;
  out.push_back({"logreg", baselines::train_logreg(data, logreg)});
  out.push_back({"tree", baselines::train_tree(data, cfg.tree)});
  out.push_back({"forest", baselines::train_forest(data, forest)});
  out.push_back({"svm", baselines::train_svm(data, svm)});
  return out;
}

CallModels train_call_models(const std::vector<ProfiledCall>& train, const CallsBenchmarkConfig& cfg) {
  auto scaling = fit_scaling(train);
  const auto x = call_feature_matrix(train, scaling);
  const auto y = call_labels(train);
  auto dnn = nn::train_dnn(x, y, cfg.dnn);
  return {std::move(scaling), std::move(dnn.model), std::move(dnn.history), train_call_baselines(x, y, cfg)};
}

CountrySummary evaluate_call_models(const CallModels& models, const std::vector<ProfiledCall>& test) {
  const auto x = call_feature_matrix(test, models.scaling);
  const auto y = call_labels(test);
  std::vector<MethodRows> per_method;

  const Eigen::VectorXd p = nn::dnn_forward_batch(models.dnn, x);
  std::vector<Outcome> outcomes;
  for (std::size_t i = 0; i < test.size(); ++i)
    outcomes.push_back({test[i].event.region(), y[i], p[static_cast<Eigen::Index>(i)] >= models.dnn.threshold() ? 1 : 0});
  per_method.push_back({"dnn", evaluate(outcomes)});

  for (const auto& [name, clf] : models.baselines) {
    outcomes.clear();
    for (std::size_t i = 0; i < test.size(); ++i)
      outcomes.push_back({test[i].event.region(), y[i], baselines::predict(clf, x.row(static_cast<Eigen::Index>(i)).transpose()).cls});
    per_method.push_back({name, evaluate(outcomes)});
  }
  return cross_country_summary("calls", std::move(per_method));
}

CountrySummary run_calls_benchmark(const std::vector<ProfiledCall>& data, const CallsBenchmarkConfig& cfg) {
  const auto split = split_calls(data, cfg.test_fraction, cfg.seed);
  return evaluate_call_models(train_call_models(split.train, cfg), split.test);
}

AdsSplit split_ads(const std::vector<AdCapture>& corpus, double test_fraction, std::uint64_t seed) {
  auto s = stratified_split(ad_labels(corpus), test_fraction, seed);
  return {pick(corpus, s.train), pick(corpus, s.test)};
}

std::vector<int> ad_labels(std::span<const AdCapture> captures) {
  std::vector<int> y;
  y.reserve(captures.size());
  for (const auto& c : captures) {
    if (!c.label) throw Error(ErrorKind::InvalidValue, "benchmark captures must be labeled");
    y.push_back(to_code(*c.label));
  }
  return y;
}

std::vector<Raster> ad_images(std::span<const AdCapture> captures) {
  std::vector<Raster> out;
  out.reserve(captures.size());
  for (const auto& c : captures) out.push_back(c.screenshot);
  return out;
}

Eigen::MatrixXd ad_feature_matrix(std::span<const AdCapture> captures) {
  const auto& lexicon = Lexicon::bundled();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(captures.size()), kAdFlatDim);
  for (std::size_t i = 0; i < captures.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = flatten_bundle(extract_ad_features(captures[i], lexicon)).transpose();
  return x;
}

std::vector<NamedOneVsRest> train_ad_baselines(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                               const AdsBenchmarkConfig& cfg) {
  const baselines::Dataset data{x, y};
  auto logreg = cfg.logreg;
  logreg.seed = cfg.seed;
  auto forest = cfg.forest;
  forest.seed = cfg.seed;
  auto svm = cfg.svm;
  svm.seed = cfg.seed;
  constexpr int k = kAdCategoryCount;
  std::vector<NamedOneVsRest> out;
  out.push_back({"logreg", baselines::train_one_vs_rest(data, k, [&](const auto& d) { return baselines::train_logreg(d, logreg); })});
  out.push_back({"tree", baselines::train_one_vs_rest(data, k, [&](const auto& d) { return baselines::train_tree(d, cfg.tree); })});
  out.push_back({"forest", baselines::train_one_vs_rest(data, k, [&](const auto& d) { return baselines::train_forest(d, forest); })});
  out.push_back({"svm", baselines::train_one_vs_rest(data, k, [&](const auto& d) { return baselines::train_svm(d, svm); })});
  return out;
}

AdModels train_ad_models(const std::vector<AdCapture>& train, const AdsBenchmarkConfig& cfg) {
  const auto y = ad_labels(train);
  auto cnn = nn::train_cnn(ad_images(train), y, cfg.cnn);
  return {std::move(cnn.model), std::move(cnn.history), train_ad_baselines(ad_feature_matrix(train), y, cfg)};
}

int cnn_predict_class(const nn::CnnModel& model, const Raster& image) {
  const Eigen::Vector4d p = nn::cnn_forward(model, image);
  int best = 0;
  for (int k = 1; k < nn::CnnModel::kClasses; ++k)
    if (p[k] > p[best]) best = k;
  return best;
}

CountrySummary evaluate_ad_models(const AdModels& models, const std::vector<AdCapture>& test) {
  const auto y = ad_labels(test);
  const auto x = ad_feature_matrix(test);
  std::vector<MethodRows> per_method;
  std::vector<Outcome> outcomes;
  for (std::size_t i = 0; i < test.size(); ++i)
    outcomes.push_back({test[i].context.region, y[i], cnn_predict_class(models.cnn, test[i].screenshot)});
  per_method.push_back({"cnn", evaluate(outcomes)});
  for (const auto& [name, ovr] : models.baselines) {
    outcomes.clear();
    for (std::size_t i = 0; i < test.size(); ++i)
      outcomes.push_back({test[i].context.region, y[i], ovr.predict(x.row(static_cast<Eigen::Index>(i)).transpose())});
    per_method.push_back({name, evaluate(outcomes)});
  }
  return cross_country_summary("ads", std::move(per_method));
}

CountrySummary run_ads_benchmark(const std::vector<AdCapture>& corpus, const AdsBenchmarkConfig& cfg) {
  const auto split = split_ads(corpus, cfg.test_fraction, cfg.seed);
  return evaluate_ad_models(train_ad_models(split.train, cfg), split.test);
}

}  // namespace scamguard::sim
