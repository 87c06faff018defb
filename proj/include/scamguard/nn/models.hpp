#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "scamguard/domain.hpp"
#include "scamguard/features.hpp"
#include "scamguard/nn/layers.hpp"

namespace scamguard::nn {

using Dense = DenseLayer<double>;

/// The calls network: 9->14 ReLU, 14->9 ReLU, 9->5 ReLU, 5->1 sigmoid.
/// Any other layer list is rejected at construction.
class DnnModel {
 public:
  static constexpr std::array<std::array<int, 2>, 4> kShapes = {{{9, 14}, {14, 9}, {9, 5}, {5, 1}}};

  explicit DnnModel(std::vector<Dense> layers, double threshold = 0.5, std::string version = "dnn-0");

  /// All parameters zero.
  static DnnModel zeros(double threshold = 0.5, std::string version = "dnn-0");

  const std::vector<Dense>& layers() const noexcept { return layers_; }
  double threshold() const noexcept { return threshold_; }
  const std::string& version() const noexcept { return version_; }

  DnnModel with_version(std::string version) const;

  friend bool operator==(const DnnModel&, const DnnModel&) = default;

 private:
  std::vector<Dense> layers_;
  double threshold_;
  std::string version_;
};

double dnn_forward(const DnnModel& model, const CallFeatureVector& x);
double dnn_forward(const DnnModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Scores for each row of `x` (n x 9).
Eigen::VectorXd dnn_forward_batch(const DnnModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x);

struct DnnGradients {
  std::vector<DenseGrad<double>> layers;
  double loss = 0.0;
};

/// Mean binary cross-entropy over the rows of `x` with labels in {0,1}.
DnnGradients dnn_backward(const DnnModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const std::vector<int>& labels);

/// The ads network: conv(1->8) ReLU, pool, conv(8->16) ReLU, pool,
/// dense 1024->64 ReLU, dense 64->4 softmax. Input is a 32x32 raster.
class CnnModel {
 public:
  static constexpr int kClasses = 4;

  CnnModel(Conv2d<double> conv1, Conv2d<double> conv2, Dense dense1, Dense dense2, std::string version = "cnn-0");

  static CnnModel zeros(std::string version = "cnn-0");

  const Conv2d<double>& conv1() const noexcept { return conv1_; }
  const Conv2d<double>& conv2() const noexcept { return conv2_; }
  const Dense& dense1() const noexcept { return dense1_; }
  const Dense& dense2() const noexcept { return dense2_; }
  const std::string& version() const noexcept { return version_; }

  CnnModel with_version(std::string version) const;

  friend bool operator==(const CnnModel&, const CnnModel&) = default;

 private:
  Conv2d<double> conv1_, conv2_;
  Dense dense1_, dense2_;
  std::string version_;
};

Eigen::Vector4d cnn_forward(const CnnModel& model, const Raster& image);

struct CnnGradients {
  ConvGrad<double> conv1, conv2;
  DenseGrad<double> dense1, dense2;
  double loss = 0.0;
};

/// Mean categorical cross-entropy over the batch; labels in [0, 4).
CnnGradients cnn_backward(const CnnModel& model, const std::vector<Raster>& images, const std::vector<int>& labels);

}  // namespace scamguard::nn
