#pragma once

#include <cstdint>
#include <vector>

#include "scamguard/nn/models.hpp"
#include "scamguard/rng.hpp"

namespace scamguard::nn {

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int early_stop_patience = 10;
  double validation_fraction = 0.1;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;  // mean mini-batch loss per epoch
  std::vector<double> val_loss;    // validation loss after each epoch
  double initial_val_loss = 0.0;
  int best_epoch = 0;              // 0 = the initial model
  double best_val_loss = 0.0;
};

Json to_json(const TrainHistory& h);

struct DnnTrainResult {
  DnnModel model;
  TrainHistory history;
};

struct CnnTrainResult {
  CnnModel model;
  TrainHistory history;
};

/// He-uniform hidden layers, Xavier-uniform output layer, zero biases.
DnnModel init_dnn(Rng& rng);
CnnModel init_cnn(Rng& rng);

/// Mini-batch SGD on binary cross-entropy with early stopping on a seeded
/// validation split; returns the checkpoint with the lowest validation loss.
DnnTrainResult train_dnn(const Eigen::Ref<const Eigen::MatrixXd>& x, const std::vector<int>& labels,
                         const TrainConfig& cfg);

CnnTrainResult train_cnn(const std::vector<Raster>& images, const std::vector<int>& labels, const TrainConfig& cfg);

/// Indices of the training and validation parts of a seeded split.
struct SplitIndices {
  std::vector<std::size_t> train, validation;
};
SplitIndices validation_split(std::size_t n, double fraction, std::uint64_t seed);

}  // namespace scamguard::nn
