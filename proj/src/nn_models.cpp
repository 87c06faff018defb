#include "scamguard/nn/models.hpp"

namespace scamguard::nn {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "softmax") return Activation::Softmax;
  if (s == "identity") return Activation::Identity;
  throw Error(ErrorKind::SchemaMismatch, "unknown activation '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// DNN

DnnModel::DnnModel(std::vector<Dense> layers, double threshold, std::string version)
    : layers_(std::move(layers)), threshold_(threshold), version_(std::move(version)) {
  constexpr auto k = ErrorKind::ArchitectureMismatch;
  if (layers_.size() != kShapes.size()) throw Error(k, "calls model needs exactly 4 dense layers");
  for (std::size_t i = 0; i < kShapes.size(); ++i) {
    const auto& l = layers_[i];
    const auto want_act = i + 1 == kShapes.size() ? Activation::Sigmoid : Activation::ReLU;
    if (l.in_size() != kShapes[i][0] || l.out_size() != kShapes[i][1] || l.biases.size() != kShapes[i][1])
      throw Error(k, "layer " + std::to_string(i) + " must be " + std::to_string(kShapes[i][0]) + "->" +
                         std::to_string(kShapes[i][1]));
    if (l.activation != want_act) throw Error(k, "layer " + std::to_string(i) + " has the wrong activation");
    if (!l.finite()) throw Error(ErrorKind::InvalidValue, "non-finite parameter");
  }
  if (!(threshold_ > 0.0 && threshold_ < 1.0)) throw Error(ErrorKind::InvalidValue, "threshold must lie in (0,1)");
}

DnnModel DnnModel::zeros(double threshold, std::string version) {
  std::vector<Dense> layers;
  for (std::size_t i = 0; i < kShapes.size(); ++i)
    layers.emplace_back(kShapes[i][0], kShapes[i][1], i + 1 == kShapes.size() ? Activation::Sigmoid : Activation::ReLU);
  return DnnModel(std::move(layers), threshold, std::move(version));
}

DnnModel DnnModel::with_version(std::string version) const {
  DnnModel m = *this;
  m.version_ = std::move(version);
  return m;
}

namespace {

std::vector<DenseCache<double>> dnn_pass(const DnnModel& model, const Matrix<double>& x_cols) {
  std::vector<DenseCache<double>> caches;
  caches.reserve(model.layers().size());
  const Matrix<double>* in = &x_cols;
  for (const auto& layer : model.layers()) {
    caches.push_back(dense_forward(layer, *in));
    in = &caches.back().a;
  }
  return caches;
}

}  // namespace

double dnn_forward(const DnnModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != kCallFeatureDim) throw Error(ErrorKind::BadInputDim, "calls model expects 9 features");
  if (!x.allFinite()) throw Error(ErrorKind::BadInputDim, "non-finite feature");
  Matrix<double> col = x;
  return dnn_pass(model, col).back().a(0, 0);
}

double dnn_forward(const DnnModel& model, const CallFeatureVector& x) {
  return dnn_forward(model, Eigen::VectorXd(x.values));
}

Eigen::VectorXd dnn_forward_batch(const DnnModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != kCallFeatureDim) throw Error(ErrorKind::BadInputDim, "calls model expects 9 features");
  Matrix<double> cols = x.transpose();
  return dnn_pass(model, cols).back().a.row(0).transpose();
}

DnnGradients dnn_backward(const DnnModel& model, const Eigen::Ref<const Eigen::MatrixXd>& x,
                          const std::vector<int>& labels) {
  if (x.rows() == 0) throw Error(ErrorKind::EmptyBatch, "empty batch");
  if (x.cols() != kCallFeatureDim) throw Error(ErrorKind::BadInputDim, "calls model expects 9 features");
  if (labels.size() != static_cast<std::size_t>(x.rows()))
    throw Error(ErrorKind::BadInputDim, "label count does not match batch");
  for (int y : labels)
    if (y != 0 && y != 1) throw Error(ErrorKind::InvalidValue, "binary labels must be 0 or 1");

  Matrix<double> cols = x.transpose();
  auto caches = dnn_pass(model, cols);

  DnnGradients out;
  Matrix<double> grad_z;
  out.loss = binary_cross_entropy(caches.back().a, labels, &grad_z);
  out.layers.resize(caches.size());
  for (std::size_t i = caches.size(); i-- > 0;) {
    const auto& layer = model.layers()[i];
    auto [g, grad_in] = dense_backward_from_z(layer, caches[i], grad_z);
    out.layers[i] = std::move(g);
    if (i > 0) grad_z = activation_backward(model.layers()[i - 1].activation, caches[i - 1].z, caches[i - 1].a, grad_in);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CNN

namespace {

constexpr int kImage = kScreenshotSize;
constexpr int kConv1Out = 8;
constexpr int kConv2Out = 16;
constexpr int kFlat = kConv2Out * (kImage / 4) * (kImage / 4);
constexpr int kHidden = 64;

struct CnnTrace {
  ConvCache<double> c1, c2;
  FeatureMap<double> z1, z2;
  PoolCache p1, p2;
  DenseCache<double> d1, d2;
};

FeatureMap<double> to_map(const Raster& image) {
  if (image.rows() != kImage || image.cols() != kImage)
    throw Error(ErrorKind::BadInputShape, "ads model expects a 32x32 image");
  if (!image.allFinite()) throw Error(ErrorKind::BadInputShape, "non-finite pixel");
  FeatureMap<double> m(1, kImage, kImage);
  for (int y = 0; y < kImage; ++y)
    for (int x = 0; x < kImage; ++x) m.at(0, y, x) = image(y, x);
  return m;
}

FeatureMap<double> relu_map(const FeatureMap<double>& m) {
  FeatureMap<double> out = m;
  out.data = relu(m.data);
  return out;
}

Matrix<double> relu_grad(const FeatureMap<double>& z, const Matrix<double>& g) {
  return g.cwiseProduct((z.data.array() > 0.0).cast<double>().matrix());
}

void cnn_pass(const CnnModel& model, const Raster& image, CnnTrace& t) {
  auto in = to_map(image);
  t.z1 = conv_forward(model.conv1(), in, &t.c1);
  auto pooled1 = maxpool_forward(relu_map(t.z1), &t.p1);
  t.z2 = conv_forward(model.conv2(), pooled1, &t.c2);
  auto pooled2 = maxpool_forward(relu_map(t.z2), &t.p2);
  Matrix<double> flat = flatten(pooled2);
  t.d1 = dense_forward(model.dense1(), flat);
  t.d2 = dense_forward(model.dense2(), t.d1.a);
}

}  // namespace

CnnModel::CnnModel(Conv2d<double> conv1, Conv2d<double> conv2, Dense dense1, Dense dense2, std::string version)
    : conv1_(std::move(conv1)),
      conv2_(std::move(conv2)),
      dense1_(std::move(dense1)),
      dense2_(std::move(dense2)),
      version_(std::move(version)) {
  constexpr auto k = ErrorKind::ArchitectureMismatch;
  if (conv1_.in_channels() != 1 || conv1_.out_channels() != kConv1Out || conv1_.weights.cols() != 9 ||
      conv1_.biases.size() != kConv1Out)
    throw Error(k, "conv1 must be 8 filters of 3x3x1");
  if (conv2_.in_channels() != kConv1Out || conv2_.out_channels() != kConv2Out ||
      conv2_.weights.cols() != kConv1Out * 9 || conv2_.biases.size() != kConv2Out)
    throw Error(k, "conv2 must be 16 filters of 3x3x8");
  if (dense1_.in_size() != kFlat || dense1_.out_size() != kHidden || dense1_.biases.size() != kHidden ||
      dense1_.activation != Activation::ReLU)
    throw Error(k, "dense1 must be 1024->64 relu");
  if (dense2_.in_size() != kHidden || dense2_.out_size() != kClasses || dense2_.biases.size() != kClasses ||
      dense2_.activation != Activation::Softmax)
    throw Error(k, "dense2 must be 64->4 softmax");
  if (!conv1_.finite() || !conv2_.finite() || !dense1_.finite() || !dense2_.finite())
    throw Error(ErrorKind::InvalidValue, "non-finite parameter");
}

CnnModel CnnModel::zeros(std::string version) {
  return CnnModel(Conv2d<double>(1, kConv1Out), Conv2d<double>(kConv1Out, kConv2Out),
                  Dense(kFlat, kHidden, Activation::ReLU), Dense(kHidden, kClasses, Activation::Softmax),
                  std::move(version));
}

CnnModel CnnModel::with_version(std::string version) const {
  CnnModel m = *this;
  m.version_ = std::move(version);
  return m;
}

Eigen::Vector4d cnn_forward(const CnnModel& model, const Raster& image) {
  CnnTrace t;
  cnn_pass(model, image, t);
  return t.d2.a.col(0);
}

CnnGradients cnn_backward(const CnnModel& model, const std::vector<Raster>& images, const std::vector<int>& labels) {
  if (images.empty()) throw Error(ErrorKind::EmptyBatch, "empty batch");
  if (labels.size() != images.size()) throw Error(ErrorKind::BadInputDim, "label count does not match batch");
  for (int y : labels)
    if (y < 0 || y >= CnnModel::kClasses) throw Error(ErrorKind::InvalidValue, "class label out of range");

  CnnGradients g;
  g.conv1 = {Matrix<double>::Zero(kConv1Out, 9), Vector<double>::Zero(kConv1Out)};
  g.conv2 = {Matrix<double>::Zero(kConv2Out, kConv1Out * 9), Vector<double>::Zero(kConv2Out)};
  g.dense1 = {Matrix<double>::Zero(kHidden, kFlat), Vector<double>::Zero(kHidden)};
  g.dense2 = {Matrix<double>::Zero(CnnModel::kClasses, kHidden), Vector<double>::Zero(CnnModel::kClasses)};

  const double n = static_cast<double>(images.size());
  CnnTrace t;
  for (std::size_t i = 0; i < images.size(); ++i) {
    cnn_pass(model, images[i], t);
    Matrix<double> grad_z;
    g.loss += categorical_cross_entropy(t.d2.a, {labels[i]}, &grad_z) / n;
    grad_z /= n;

    auto [gd2, grad_h] = dense_backward_from_z(model.dense2(), t.d2, grad_z);
    auto [gd1, grad_flat] = dense_backward(model.dense1(), t.d1, grad_h);
    Vector<double> flat_grad = grad_flat.col(0);
    auto grad_a2 = maxpool_backward(t.p2, unflatten_rows(flat_grad, kConv2Out));
    auto [gc2, grad_p1] = conv_backward(model.conv2(), t.c2, relu_grad(t.z2, grad_a2.data));
    auto grad_a1 = maxpool_backward(t.p1, grad_p1.data);
    auto [gc1, grad_in] = conv_backward(model.conv1(), t.c1, relu_grad(t.z1, grad_a1.data));

    g.dense2.weights += gd2.weights;
    g.dense2.biases += gd2.biases;
    g.dense1.weights += gd1.weights;
    g.dense1.biases += gd1.biases;
    g.conv2.weights += gc2.weights;
    g.conv2.biases += gc2.biases;
    g.conv1.weights += gc1.weights;
    g.conv1.biases += gc1.biases;
  }
  return g;
}

}  // namespace scamguard::nn
