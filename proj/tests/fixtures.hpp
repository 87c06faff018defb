#pragma once

// Small trained models shared by the service tests, built once per process.

#include <filesystem>
#include <string>
#include <unistd.h>

#include "scamguard/nn/training.hpp"
#include "scamguard/sim/adworld.hpp"
#include "scamguard/sim/benchmark.hpp"
#include "scamguard/sim/traffic.hpp"

namespace fixtures {

struct TrainedCalls {
  scamguard::nn::DnnModel dnn;
  scamguard::ScalingSpec scaling;
};

inline const TrainedCalls& trained_calls() {
  static const TrainedCalls model = [] {
    scamguard::sim::TrafficConfig cfg;
    cfg.days = 14;
    const auto data = scamguard::sim::generate_call_dataset(cfg);
    const auto scaling = scamguard::fit_scaling(data);
    const auto x = scamguard::sim::call_feature_matrix(data, scaling);
    const auto y = scamguard::sim::call_labels(data);
    auto tc = scamguard::sim::CallsBenchmarkConfig::default_dnn_config();
    tc.epochs = 60;
    auto r = scamguard::nn::train_dnn(x, y, tc);
    return TrainedCalls{r.model.with_version("dnn-v1"), scaling};
  }();
  return model;
}

inline const scamguard::nn::CnnModel& trained_cnn() {
  static const scamguard::nn::CnnModel model = [] {
    const auto corpus = scamguard::sim::generate_ad_corpus(scamguard::sim::AdServerWorld{}, 40, 11);
    auto tc = scamguard::sim::AdsBenchmarkConfig::default_cnn_config();
    tc.epochs = 25;
    auto r = scamguard::nn::train_cnn(scamguard::sim::ad_images(corpus), scamguard::sim::ad_labels(corpus), tc);
    return r.model.with_version("cnn-v1");
  }();
  return model;
}

/// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  static int counter = 0;
  auto p = std::filesystem::temp_directory_path() /
           ("scamguard-" + name + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
