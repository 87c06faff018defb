#include "scamguard/nn/training.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace scamguard::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || epochs <= 0 || batch_size <= 0 || early_stop_patience < 0 ||
      !(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw Error(ErrorKind::InvalidValue, "invalid training configuration");
}

Json to_json(const TrainHistory& h) {
  return {{"train_loss", h.train_loss},
          {"val_loss", h.val_loss},
          {"initial_val_loss", h.initial_val_loss},
          {"best_epoch", h.best_epoch},
          {"best_val_loss", h.best_val_loss}};
}

SplitIndices validation_split(std::size_t n, double fraction, std::uint64_t seed) {
  Rng rng(mix64({seed, 0x76616cULL}));
  auto perm = permutation(n, rng);
  std::size_t n_val = n < 2 ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
  SplitIndices s;
  s.validation.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  return s;
}

namespace {

template <typename Derived>
void fill_uniform(Eigen::MatrixBase<Derived>& m, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
}

void he_init(Dense& l, Rng& rng) {
  fill_uniform(l.weights, std::sqrt(6.0 / static_cast<double>(l.in_size())), rng);
  l.biases.setZero();
}

void xavier_init(Dense& l, Rng& rng) {
  fill_uniform(l.weights, std::sqrt(6.0 / static_cast<double>(l.in_size() + l.out_size())), rng);
  l.biases.setZero();
}

void require_classes(const std::vector<int>& labels, std::size_t min_classes) {
  std::set<int> seen(labels.begin(), labels.end());
  if (seen.size() < min_classes) throw Error(ErrorKind::DegenerateDataset, "training data needs at least two classes");
}

/// Shared epoch loop. `step(model, batch_idx)` returns (updated model, batch loss);
/// `val_loss(model)` evaluates the validation split.
template <typename Model, typename Step, typename ValLoss>
std::pair<Model, TrainHistory> sgd_loop(Model model, const std::vector<std::size_t>& train_idx, const TrainConfig& cfg,
                                        Step step, ValLoss val_loss) {
  TrainHistory h;
  h.initial_val_loss = val_loss(model);
  h.best_val_loss = h.initial_val_loss;
  Model best = model;
  Rng rng(mix64({cfg.seed, 0x7368756666ULL}));
  std::vector<std::size_t> order = train_idx;
  int wait = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
      auto [next, loss] = step(model, batch);
      model = std::move(next);
      total += loss;
      ++batches;
    }
    h.train_loss.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    const double v = val_loss(model);
    h.val_loss.push_back(v);
    if (v < h.best_val_loss) {
      h.best_val_loss = v;
      h.best_epoch = epoch;
      best = model;
      wait = 0;
    } else if (++wait > cfg.early_stop_patience) {
      break;
    }
  }
  return {std::move(best), std::move(h)};
}

}  // namespace

DnnModel init_dnn(Rng& rng) {
  auto layers = DnnModel::zeros().layers();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) he_init(layers[i], rng);
  xavier_init(layers.back(), rng);
  return DnnModel(std::move(layers));
}

CnnModel init_cnn(Rng& rng) {
  auto z = CnnModel::zeros();
  Conv2d<double> c1 = z.conv1(), c2 = z.conv2();
  Dense d1 = z.dense1(), d2 = z.dense2();
  fill_uniform(c1.weights, std::sqrt(6.0 / static_cast<double>(c1.weights.cols())), rng);
  fill_uniform(c2.weights, std::sqrt(6.0 / static_cast<double>(c2.weights.cols())), rng);
  he_init(d1, rng);
  xavier_init(d2, rng);
  return CnnModel(std::move(c1), std::move(c2), std::move(d1), std::move(d2));
}

DnnTrainResult train_dnn(const Eigen::Ref<const Eigen::MatrixXd>& x, const std::vector<int>& labels,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (x.cols() != kCallFeatureDim) throw Error(ErrorKind::BadInputDim, "calls model expects 9 features");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) throw Error(ErrorKind::BadInputDim, "label count mismatch");
  require_classes(labels, 2);

  auto split = validation_split(labels.size(), cfg.validation_fraction, cfg.seed);
  auto gather = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd bx(static_cast<Eigen::Index>(idx.size()), kCallFeatureDim);
    std::vector<int> by(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      bx.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
      by[i] = labels[idx[i]];
    }
    return std::pair{std::move(bx), std::move(by)};
  };
  const auto [val_x, val_y] = gather(split.validation);

  Rng init_rng(mix64({cfg.seed, 0x696e6974ULL}));
  DnnModel start = init_dnn(init_rng);

  auto step = [&](const DnnModel& m, const std::vector<std::size_t>& batch) {
    auto [bx, by] = gather(batch);
    auto g = dnn_backward(m, bx, by);
    auto layers = m.layers();
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].weights -= cfg.learning_rate * g.layers[i].weights;
      layers[i].biases -= cfg.learning_rate * g.layers[i].biases;
    }
    return std::pair{DnnModel(std::move(layers), m.threshold(), m.version()), g.loss};
  };
  auto val_loss = [&](const DnnModel& m) {
    if (val_y.empty()) return 0.0;
    Matrix<double> p = dnn_forward_batch(m, val_x).transpose();
    return binary_cross_entropy<double>(p, val_y, nullptr);
  };

  auto [model, history] = sgd_loop(std::move(start), split.train, cfg, step, val_loss);
  return {std::move(model), std::move(history)};
}

CnnTrainResult train_cnn(const std::vector<Raster>& images, const std::vector<int>& labels, const TrainConfig& cfg) {
  cfg.validate();
  if (images.size() != labels.size()) throw Error(ErrorKind::BadInputDim, "label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= CnnModel::kClasses) throw Error(ErrorKind::InvalidValue, "class label out of range");
  require_classes(labels, 2);

  auto split = validation_split(labels.size(), cfg.validation_fraction, cfg.seed);
  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<Raster> bx;
    std::vector<int> by;
    bx.reserve(idx.size());
    for (auto i : idx) {
      bx.push_back(images[i]);
      by.push_back(labels[i]);
    }
    return std::pair{std::move(bx), std::move(by)};
  };
  const auto [val_x, val_y] = gather(split.validation);

  Rng init_rng(mix64({cfg.seed, 0x696e6974ULL}));
  CnnModel start = init_cnn(init_rng);

  auto step = [&](const CnnModel& m, const std::vector<std::size_t>& batch) {
    auto [bx, by] = gather(batch);
    auto g = cnn_backward(m, bx, by);
    const double lr = cfg.learning_rate;
    Conv2d<double> c1 = m.conv1(), c2 = m.conv2();
    Dense d1 = m.dense1(), d2 = m.dense2();
    c1.weights -= lr * g.conv1.weights;
    c1.biases -= lr * g.conv1.biases;
    c2.weights -= lr * g.conv2.weights;
    c2.biases -= lr * g.conv2.biases;
    d1.weights -= lr * g.dense1.weights;
    d1.biases -= lr * g.dense1.biases;
    d2.weights -= lr * g.dense2.weights;
    d2.biases -= lr * g.dense2.biases;
    return std::pair{CnnModel(std::move(c1), std::move(c2), std::move(d1), std::move(d2), m.version()), g.loss};
  };
  auto val_loss = [&](const CnnModel& m) {
    if (val_y.empty()) return 0.0;
    Matrix<double> p(CnnModel::kClasses, static_cast<Eigen::Index>(val_x.size()));
    for (std::size_t i = 0; i < val_x.size(); ++i) p.col(static_cast<Eigen::Index>(i)) = cnn_forward(m, val_x[i]);
    return categorical_cross_entropy<double>(p, val_y, nullptr);
  };

  auto [model, history] = sgd_loop(std::move(start), split.train, cfg, step, val_loss);
  return {std::move(model), std::move(history)};
}

}  // namespace scamguard::nn
