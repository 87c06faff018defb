#pragma once

// Differentiable building blocks. Batches are stored column-wise: each column
// of an activation matrix is one sample.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string_view>
#include <vector>

#include "scamguard/error.hpp"

namespace scamguard::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Activation { ReLU, Sigmoid, Softmax, Identity };

std::string_view to_string(Activation a) noexcept;
Activation activation_from_string(std::string_view s);

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <typename Derived>
Matrix<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& z) {
  return z.cwiseMax(typename Derived::Scalar(0));
}

/// Column-wise softmax with the usual max shift.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    Scalar m = z.col(c).maxCoeff();
    out.col(c) = (z.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

template <typename Derived>
Matrix<typename Derived::Scalar> activate(Activation act, const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  switch (act) {
    case Activation::ReLU: return relu(z);
    case Activation::Sigmoid: return z.unaryExpr([](Scalar v) { return sigmoid(v); });
    case Activation::Softmax: return softmax(z);
    case Activation::Identity: return z;
  }
  return z;
}

/// dL/dz given z, a = act(z) and dL/da.
template <typename Scalar>
Matrix<Scalar> activation_backward(Activation act, const Matrix<Scalar>& z, const Matrix<Scalar>& a,
                                   const Matrix<Scalar>& grad_a) {
  switch (act) {
    case Activation::ReLU:
      return grad_a.cwiseProduct((z.array() > Scalar(0)).template cast<Scalar>().matrix());
    case Activation::Sigmoid:
      return grad_a.cwiseProduct(a.cwiseProduct((Scalar(1) - a.array()).matrix()));
    case Activation::Softmax: {
      // J^T g = a * (g - <a, g>) per column.
      Matrix<Scalar> out(a.rows(), a.cols());
      for (Eigen::Index c = 0; c < a.cols(); ++c)
        out.col(c) = a.col(c).cwiseProduct((grad_a.col(c).array() - a.col(c).dot(grad_a.col(c))).matrix());
      return out;
    }
    case Activation::Identity: return grad_a;
  }
  return grad_a;
}

// ---------------------------------------------------------------------------
// Dense

template <typename Scalar = double>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> biases;   // out
  Activation activation = Activation::Identity;

  DenseLayer() = default;
  DenseLayer(Eigen::Index in, Eigen::Index out, Activation act)
      : weights(Matrix<Scalar>::Zero(out, in)), biases(Vector<Scalar>::Zero(out)), activation(act) {}

  Eigen::Index in_size() const { return weights.cols(); }
  Eigen::Index out_size() const { return weights.rows(); }
  bool finite() const { return weights.allFinite() && biases.allFinite(); }

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.activation == b.activation && a.weights.rows() == b.weights.rows() &&
           a.weights.cols() == b.weights.cols() && a.weights == b.weights && a.biases == b.biases;
  }
};

template <typename Scalar>
struct DenseCache {
  Matrix<Scalar> input, z, a;
};

template <typename Scalar>
struct DenseGrad {
  Matrix<Scalar> weights;
  Vector<Scalar> biases;
};

template <typename Scalar, typename Derived>
DenseCache<Scalar> dense_forward(const DenseLayer<Scalar>& layer, const Eigen::MatrixBase<Derived>& x) {
  DenseCache<Scalar> c;
  c.input = x;
  c.z = (layer.weights * x).colwise() + layer.biases;
  c.a = activate(layer.activation, c.z);
  return c;
}

template <typename Scalar>
std::pair<DenseGrad<Scalar>, Matrix<Scalar>> dense_backward_from_z(const DenseLayer<Scalar>& layer,
                                                                   const DenseCache<Scalar>& cache,
                                                                   const Matrix<Scalar>& grad_z) {
  DenseGrad<Scalar> g{grad_z * cache.input.transpose(), grad_z.rowwise().sum()};
  return {std::move(g), layer.weights.transpose() * grad_z};
}

/// Backward through one dense layer; returns parameter gradients and dL/dx.
template <typename Scalar>
std::pair<DenseGrad<Scalar>, Matrix<Scalar>> dense_backward(const DenseLayer<Scalar>& layer,
                                                            const DenseCache<Scalar>& cache,
                                                            const Matrix<Scalar>& grad_a) {
  return dense_backward_from_z(layer, cache, activation_backward(layer.activation, cache.z, cache.a, grad_a));
}

// ---------------------------------------------------------------------------
// Feature maps, 3x3 convolution (stride 1, zero padding 1) and 2x2 max pooling

/// Channels x (height*width), spatial index y*width + x.
template <typename Scalar = double>
struct FeatureMap {
  Matrix<Scalar> data;
  int height = 0;
  int width = 0;

  FeatureMap() = default;
  FeatureMap(int channels, int h, int w) : data(Matrix<Scalar>::Zero(channels, h * w)), height(h), width(w) {}

  int channels() const { return static_cast<int>(data.rows()); }
  Scalar& at(int c, int y, int x) { return data(c, y * width + x); }
  Scalar at(int c, int y, int x) const { return data(c, y * width + x); }
};

template <typename Scalar = double>
struct Conv2d {
  static constexpr int kKernel = 3;
  Matrix<Scalar> weights;  // out x (in*9), column ic*9 + ky*3 + kx
  Vector<Scalar> biases;

  Conv2d() = default;
  Conv2d(int in_channels, int out_channels)
      : weights(Matrix<Scalar>::Zero(out_channels, in_channels * 9)), biases(Vector<Scalar>::Zero(out_channels)) {}

  int in_channels() const { return static_cast<int>(weights.cols() / 9); }
  int out_channels() const { return static_cast<int>(weights.rows()); }
  bool finite() const { return weights.allFinite() && biases.allFinite(); }

  friend bool operator==(const Conv2d& a, const Conv2d& b) {
    return a.weights.rows() == b.weights.rows() && a.weights.cols() == b.weights.cols() && a.weights == b.weights &&
           a.biases == b.biases;
  }
};

template <typename Scalar>
Matrix<Scalar> im2col(const FeatureMap<Scalar>& in) {
  const int h = in.height, w = in.width;
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(in.channels() * 9, h * w);
  for (int ic = 0; ic < in.channels(); ++ic)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = ic * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            if (sx >= 0 && sx < w) cols(row, y * w + x) = in.at(ic, sy, sx);
          }
        }
      }
  return cols;
}

template <typename Scalar>
FeatureMap<Scalar> col2im(const Matrix<Scalar>& cols, int channels, int h, int w) {
  FeatureMap<Scalar> out(channels, h, w);
  for (int ic = 0; ic < channels; ++ic)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = ic * 9 + ky * 3 + kx;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (int x = 0; x < w; ++x) {
            const int sx = x + kx - 1;
            if (sx >= 0 && sx < w) out.at(ic, sy, sx) += cols(row, y * w + x);
          }
        }
      }
  return out;
}

template <typename Scalar>
struct ConvCache {
  Matrix<Scalar> cols;
  int in_channels = 0, height = 0, width = 0;
};

/// Pre-activation output of the convolution.
template <typename Scalar>
FeatureMap<Scalar> conv_forward(const Conv2d<Scalar>& conv, const FeatureMap<Scalar>& in, ConvCache<Scalar>* cache) {
  if (in.channels() != conv.in_channels())
    throw Error(ErrorKind::BadInputShape, "convolution input channel mismatch");
  Matrix<Scalar> cols = im2col(in);
  FeatureMap<Scalar> out;
  out.height = in.height;
  out.width = in.width;
  out.data = (conv.weights * cols).colwise() + conv.biases;
  if (cache) *cache = {std::move(cols), in.channels(), in.height, in.width};
  return out;
}

template <typename Scalar>
struct ConvGrad {
  Matrix<Scalar> weights;
  Vector<Scalar> biases;
};

template <typename Scalar>
std::pair<ConvGrad<Scalar>, FeatureMap<Scalar>> conv_backward(const Conv2d<Scalar>& conv, const ConvCache<Scalar>& cache,
                                                              const Matrix<Scalar>& grad_out) {
  ConvGrad<Scalar> g{grad_out * cache.cols.transpose(), grad_out.rowwise().sum()};
  Matrix<Scalar> grad_cols = conv.weights.transpose() * grad_out;
  return {std::move(g), col2im(grad_cols, cache.in_channels, cache.height, cache.width)};
}

struct PoolCache {
  std::vector<int> argmax;  // per output element (channel-major), flat input index y*w + x
  int height = 0, width = 0;
};

/// 2x2 max pooling, stride 2. Ties resolve to the first element in row-major order.
template <typename Scalar>
FeatureMap<Scalar> maxpool_forward(const FeatureMap<Scalar>& in, PoolCache* cache) {
  if (in.height % 2 != 0 || in.width % 2 != 0) throw Error(ErrorKind::BadInputShape, "pooling needs even dimensions");
  const int oh = in.height / 2, ow = in.width / 2;
  FeatureMap<Scalar> out(in.channels(), oh, ow);
  if (cache) {
    cache->argmax.assign(static_cast<std::size_t>(in.channels() * oh * ow), 0);
    cache->height = in.height;
    cache->width = in.width;
  }
  for (int c = 0; c < in.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        int best = (2 * y) * in.width + 2 * x;
        Scalar best_v = in.data(c, best);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (2 * y + dy) * in.width + 2 * x + dx;
            if (in.data(c, idx) > best_v) {
              best_v = in.data(c, idx);
              best = idx;
            }
          }
        out.at(c, y, x) = best_v;
        if (cache) cache->argmax[static_cast<std::size_t>((c * oh + y) * ow + x)] = best;
      }
  return out;
}

template <typename Scalar>
FeatureMap<Scalar> maxpool_backward(const PoolCache& cache, const Matrix<Scalar>& grad_out) {
  const int channels = static_cast<int>(grad_out.rows());
  FeatureMap<Scalar> grad_in(channels, cache.height, cache.width);
  const int outs = static_cast<int>(grad_out.cols());
  for (int c = 0; c < channels; ++c)
    for (int o = 0; o < outs; ++o)
      grad_in.data(c, cache.argmax[static_cast<std::size_t>(c * outs + o)]) += grad_out(c, o);
  return grad_in;
}

/// Channel-major flattening (c, y, x) into a single column.
template <typename Scalar>
Vector<Scalar> flatten(const FeatureMap<Scalar>& m) {
  Vector<Scalar> v(m.data.size());
  for (int c = 0; c < m.channels(); ++c) v.segment(c * m.data.cols(), m.data.cols()) = m.data.row(c).transpose();
  return v;
}

template <typename Scalar>
Matrix<Scalar> unflatten_rows(const Vector<Scalar>& v, int channels) {
  const Eigen::Index n = v.size() / channels;
  Matrix<Scalar> m(channels, n);
  for (int c = 0; c < channels; ++c) m.row(c) = v.segment(c * n, n).transpose();
  return m;
}

// ---------------------------------------------------------------------------
// Losses

inline constexpr double kProbClamp = 1e-12;

/// Mean binary cross-entropy over columns of p (1 x n) and the gradient dL/dz
/// of the sigmoid pre-activation. Clamped probabilities contribute no gradient.
template <typename Scalar>
Scalar binary_cross_entropy(const Matrix<Scalar>& p, const std::vector<int>& labels, Matrix<Scalar>* grad_z) {
  const Eigen::Index n = p.cols();
  Scalar loss = 0;
  if (grad_z) *grad_z = Matrix<Scalar>::Zero(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar raw = p(0, i);
    const Scalar q = std::clamp(raw, Scalar(kProbClamp), Scalar(1 - kProbClamp));
    const Scalar y = labels[static_cast<std::size_t>(i)];
    loss -= y * std::log(q) + (1 - y) * std::log(1 - q);
    if (grad_z && q == raw) (*grad_z)(0, i) = (raw - y) / Scalar(n);
  }
  return loss / Scalar(n);
}

/// Mean categorical cross-entropy; gradient is w.r.t. the softmax pre-activation.
template <typename Scalar>
Scalar categorical_cross_entropy(const Matrix<Scalar>& p, const std::vector<int>& labels, Matrix<Scalar>* grad_z) {
  const Eigen::Index n = p.cols();
  Scalar loss = 0;
  if (grad_z) *grad_z = Matrix<Scalar>::Zero(p.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    const Scalar raw = p(y, i);
    const Scalar q = std::clamp(raw, Scalar(kProbClamp), Scalar(1 - kProbClamp));
    loss -= std::log(q);
    if (grad_z && q == raw) {
      grad_z->col(i) = p.col(i) / Scalar(n);
      (*grad_z)(y, i) -= Scalar(1) / Scalar(n);
    }
  }
  return loss / Scalar(n);
}

}  // namespace scamguard::nn
