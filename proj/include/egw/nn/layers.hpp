// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "egw/nn/tensor.hpp"

namespace egw::nn {

enum class Padding { None, Same };
enum class Mode { Train, Infer };
enum class Activation { Linear, Relu, LeakyRelu };

inline constexpr double kLeakySlope = 0.01;

/// A trainable array and its gradient, both flat.
template <class Scalar>
struct ParamRef {
  std::string name;
  Scalar* value;
  Scalar* grad;
  Index size;
};

/// A persistent non-trainable array (batchnorm running statistics).
template <class Scalar>
struct BufferRef {
  std::string name;
  Scalar* value;
  Index size;
};

// ---------------------------------------------------------------- sizes

/// Output length of a 1D convolution. Same padding yields ceil(M/S), so R = M
/// at stride 1; no padding yields floor((M-K)/S)+1.
inline Index conv_output_size(Index length, Index kernel, Index stride, Padding padding) {
  require(kernel >= 1 && stride >= 1, ErrorKind::Parameter, "conv_output_size: need K >= 1 and S >= 1");
  require(length >= 1, ErrorKind::Parameter, "conv_output_size: need M >= 1");
  if (padding == Padding::Same) return (length + stride - 1) / stride;
  require(kernel <= length, ErrorKind::Parameter,
          "conv_output_size: kernel " + std::to_string(kernel) + " exceeds length " + std::to_string(length));
  return (length - kernel) / stride + 1;
}

/// The feature-map size formula as printed, floor((M-(K-1)+2)/S). It gives
/// M+1 at K=2, S=1 and does not agree with conv_output_size; kept for reference.
inline Index literal_output_size(Index length, Index kernel, Index stride) {
  require(kernel >= 1 && stride >= 1, ErrorKind::Parameter, "literal_output_size: need K >= 1 and S >= 1");
  const Index num = length - (kernel - 1) + 2;
  Index q = num / stride;
  if (num % stride != 0 && num < 0) --q;
  return q;
}

/// Zeros added before the first sample under same padding (TensorFlow rule:
/// the smaller half goes on the left).
inline Index same_padding_left(Index length, Index kernel, Index stride) {
  const Index out = conv_output_size(length, kernel, stride, Padding::Same);
  const Index total = std::max<Index>((out - 1) * stride + kernel - length, 0);
  return total / 2;
}

inline Index pool_output_size(Index length, Index pool) { return (length + pool - 1) / pool; }

// ---------------------------------------------------------------- scalar activations

template <class Scalar>
Scalar leaky_relu(Scalar x, Scalar slope = Scalar(kLeakySlope)) {
  return x > 0 ? x : slope * x;
}

template <class Scalar>
Scalar relu(Scalar x) {
  return x > 0 ? x : Scalar(0);
}

// ---------------------------------------------------------------- conv1d

/// Weights [Q,N,F] stored as a (Q*N) x F matrix, row q*N+n.
template <class Scalar = double>
struct Conv1DLayer {
  Index receptive_field = 1;
  Index in_channels = 1;
  Index filters = 1;
  Index stride = 1;
  Padding padding = Padding::Same;
  RowMatrix<Scalar> weights;
  Vector<Scalar> bias;

  RowMatrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;

  Conv1DLayer() = default;
  Conv1DLayer(Index q, Index n, Index f, Index s = 1, Padding pad = Padding::Same)
      : receptive_field(q), in_channels(n), filters(f), stride(s), padding(pad) {
    require(q >= 1 && n >= 1 && f >= 1 && s >= 1, ErrorKind::Parameter, "conv1d: Q, N, F, S must be >= 1");
    weights = RowMatrix<Scalar>::Zero(q * n, f);
    bias = Vector<Scalar>::Zero(f);
    weight_grad = RowMatrix<Scalar>::Zero(q * n, f);
    bias_grad = Vector<Scalar>::Zero(f);
  }

  Scalar& weight(Index q, Index n, Index f) { return weights(q * in_channels + n, f); }
  Scalar weight(Index q, Index n, Index f) const { return weights(q * in_channels + n, f); }

  void init(std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(receptive_field * (in_channels + filters)));
    for (Index i = 0; i < weights.size(); ++i) weights.data()[i] = Scalar((2 * unit_uniform(rng) - 1) * limit);
    bias.setZero();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode);
  Tensor<Scalar> backward(const Tensor<Scalar>& grad);
  std::vector<ParamRef<Scalar>> params() {
    return {{"weights", weights.data(), weight_grad.data(), weights.size()},
            {"bias", bias.data(), bias_grad.data(), bias.size()}};
  }
  std::vector<BufferRef<Scalar>> buffers() { return {}; }

 private:
  RowMatrix<Scalar> cols_;
  Shape in_shape_;
};

/// Unfold [B,M,N] into (B*R) x (Q*N) windows; out-of-range taps are zero.
template <class Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& x, Index q_len, Index stride, Padding padding) {
  const Index b_len = x.dim(0), m_len = x.dim(1), n_len = x.dim(2);
  const Index r_len = conv_output_size(m_len, q_len, stride, padding);
  const Index left = padding == Padding::Same ? same_padding_left(m_len, q_len, stride) : 0;
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(b_len * r_len, q_len * n_len);
  const auto& xm = x.matrix();
  for (Index b = 0; b < b_len; ++b) {
    for (Index r = 0; r < r_len; ++r) {
      for (Index q = 0; q < q_len; ++q) {
        const Index m = r * stride + q - left;
        if (m < 0 || m >= m_len) continue;
        cols.row(b * r_len + r).segment(q * n_len, n_len) = xm.row(b * m_len + m);
      }
    }
  }
  return cols;
}

template <class Scalar>
void check_conv_input(const Tensor<Scalar>& x, const Conv1DLayer<Scalar>& layer) {
  require(x.rank() == 3, ErrorKind::Shape, "conv1d: input must be [B,M,N], got " + shape_string(x.shape()));
  require(x.dim(2) == layer.in_channels, ErrorKind::Shape,
          "conv1d: input has " + std::to_string(x.dim(2)) + " channels, layer expects " +
              std::to_string(layer.in_channels));
  require(layer.weights.rows() == layer.receptive_field * layer.in_channels && layer.weights.cols() == layer.filters,
          ErrorKind::Shape, "conv1d: weight matrix does not match Q*N x F");
}

/// Pre-activation convolution: y[b,r,f] = sum_q sum_n w[q,n,f] x[b, r*S+q-left, n] + bias[f].
template <class Scalar>
Tensor<Scalar> conv1d_forward(const Tensor<Scalar>& x, const Conv1DLayer<Scalar>& layer) {
  check_conv_input(x, layer);
  const Index r_len = conv_output_size(x.dim(1), layer.receptive_field, layer.stride, layer.padding);
  RowMatrix<Scalar> y = im2col(x, layer.receptive_field, layer.stride, layer.padding) * layer.weights;
  y.rowwise() += layer.bias.transpose();
  return Tensor<Scalar>({x.dim(0), r_len, layer.filters}, std::move(y));
}

template <class Scalar>
Tensor<Scalar> Conv1DLayer<Scalar>::forward(const Tensor<Scalar>& x, Mode mode) {
  if (mode == Mode::Infer) return conv1d_forward(x, *this);
  check_conv_input(x, *this);
  in_shape_ = x.shape();
  cols_ = im2col(x, receptive_field, stride, padding);
  const Index r_len = conv_output_size(x.dim(1), receptive_field, stride, padding);
  RowMatrix<Scalar> y = cols_ * weights;
  y.rowwise() += bias.transpose();
  return Tensor<Scalar>({x.dim(0), r_len, filters}, std::move(y));
}

template <class Scalar>
Tensor<Scalar> Conv1DLayer<Scalar>::backward(const Tensor<Scalar>& grad) {
  require(!in_shape_.empty(), ErrorKind::State, "conv1d: backward before forward");
  const auto& dy = grad.matrix();
  weight_grad.noalias() = cols_.transpose() * dy;
  bias_grad = dy.colwise().sum().transpose();
  const RowMatrix<Scalar> dcols = dy * weights.transpose();

  const Index b_len = in_shape_[0], m_len = in_shape_[1], n_len = in_shape_[2];
  const Index r_len = grad.dim(1);
  const Index left = padding == Padding::Same ? same_padding_left(m_len, receptive_field, stride) : 0;
  Tensor<Scalar> dx(in_shape_);
  auto& dxm = dx.matrix();
  for (Index b = 0; b < b_len; ++b) {
    for (Index r = 0; r < r_len; ++r) {
      for (Index q = 0; q < receptive_field; ++q) {
        const Index m = r * stride + q - left;
        if (m < 0 || m >= m_len) continue;
        dxm.row(b * m_len + m) += dcols.row(b * r_len + r).segment(q * n_len, n_len);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- batchnorm

/// Per-channel normalisation over every leading index (batch and time).
template <class Scalar = double>
struct BatchNormLayer {
  Index features = 1;
  Scalar epsilon = Scalar(1e-5);
  Scalar momentum = Scalar(0.9);
  Vector<Scalar> gamma, beta, running_mean, running_var;
  bool has_running_stats = false;

  Vector<Scalar> gamma_grad, beta_grad;

  BatchNormLayer() = default;
  explicit BatchNormLayer(Index n, Scalar eps = Scalar(1e-5), Scalar mom = Scalar(0.9))
      : features(n), epsilon(eps), momentum(mom) {
    require(n >= 1, ErrorKind::Parameter, "batchnorm: need at least one feature");
    require(eps > 0, ErrorKind::Parameter, "batchnorm: epsilon must be positive");
    require(mom >= 0 && mom <= 1, ErrorKind::Parameter, "batchnorm: momentum must be in [0,1]");
    gamma = Vector<Scalar>::Ones(n);
    beta = Vector<Scalar>::Zero(n);
    running_mean = Vector<Scalar>::Zero(n);
    running_var = Vector<Scalar>::Ones(n);
    gamma_grad = Vector<Scalar>::Zero(n);
    beta_grad = Vector<Scalar>::Zero(n);
  }

  void init(std::mt19937_64&) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode);
  Tensor<Scalar> backward(const Tensor<Scalar>& grad);
  std::vector<ParamRef<Scalar>> params() {
    return {{"gamma", gamma.data(), gamma_grad.data(), gamma.size()},
            {"beta", beta.data(), beta_grad.data(), beta.size()}};
  }
  std::vector<BufferRef<Scalar>> buffers() {
    return {{"running_mean", running_mean.data(), running_mean.size()},
            {"running_var", running_var.data(), running_var.size()}};
  }

 private:
  RowMatrix<Scalar> xhat_;
  Vector<Scalar> inv_std_;
  Shape shape_;
};

template <class Scalar>
void check_bn_input(const Tensor<Scalar>& x, const BatchNormLayer<Scalar>& layer) {
  require(x.rank() >= 2 && x.shape().back() == layer.features, ErrorKind::Shape,
          "batchnorm: last dimension must be " + std::to_string(layer.features) + ", got " + shape_string(x.shape()));
}

/// Train mode normalises with batch statistics and folds them into the running
/// estimates; infer mode applies the running estimates as a fixed affine map.
template <class Scalar>
Tensor<Scalar> batchnorm_forward(const Tensor<Scalar>& x, BatchNormLayer<Scalar>& layer, Mode mode) {
  return layer.forward(x, mode);
}

template <class Scalar>
Tensor<Scalar> batchnorm_infer(const Tensor<Scalar>& x, const BatchNormLayer<Scalar>& layer) {
  check_bn_input(x, layer);
  require(layer.has_running_stats, ErrorKind::State, "batchnorm: inference before any running statistics");
  const Vector<Scalar> scale = layer.gamma.array() / (layer.running_var.array() + layer.epsilon).sqrt();
  const Vector<Scalar> shift = layer.beta.array() - layer.running_mean.array() * scale.array();
  RowMatrix<Scalar> y = x.matrix() * scale.asDiagonal();
  y.rowwise() += shift.transpose();
  return Tensor<Scalar>(x.shape(), std::move(y));
}

template <class Scalar>
Tensor<Scalar> BatchNormLayer<Scalar>::forward(const Tensor<Scalar>& x, Mode mode) {
  if (mode == Mode::Infer) return batchnorm_infer(x, *this);
  check_bn_input(x, *this);
  const auto& xm = x.matrix();
  const Index rows = xm.rows();
  require(rows >= 1, ErrorKind::EmptyInput, "batchnorm: empty batch in train mode");
  const Vector<Scalar> mean = xm.colwise().mean().transpose();
  RowMatrix<Scalar> centered = xm.rowwise() - mean.transpose();
  const Vector<Scalar> var = centered.array().square().colwise().sum().transpose() / Scalar(rows);
  inv_std_ = (var.array() + epsilon).rsqrt();
  xhat_ = centered * inv_std_.asDiagonal();
  RowMatrix<Scalar> y = xhat_ * gamma.asDiagonal();
  y.rowwise() += beta.transpose();
  shape_ = x.shape();

  running_mean = momentum * running_mean + (Scalar(1) - momentum) * mean;
  running_var = momentum * running_var + (Scalar(1) - momentum) * var;
  has_running_stats = true;
  return Tensor<Scalar>(x.shape(), std::move(y));
}

template <class Scalar>
Tensor<Scalar> BatchNormLayer<Scalar>::backward(const Tensor<Scalar>& grad) {
  require(!shape_.empty(), ErrorKind::State, "batchnorm: backward before a train-mode forward");
  const auto& dy = grad.matrix();
  const Scalar m = Scalar(dy.rows());
  gamma_grad = dy.cwiseProduct(xhat_).colwise().sum().transpose();
  beta_grad = dy.colwise().sum().transpose();
  // dx = inv_std/m * (m*dxhat - sum(dxhat) - xhat*sum(dxhat*xhat)), dxhat = dy*gamma
  const RowMatrix<Scalar> dxhat = dy * gamma.asDiagonal();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum_dxhat = dxhat.colwise().sum();
  const Eigen::Matrix<Scalar, 1, Eigen::Dynamic> sum_dxhat_xhat = dxhat.cwiseProduct(xhat_).colwise().sum();
  RowMatrix<Scalar> dx = (dxhat * m).rowwise() - sum_dxhat;
  dx -= xhat_ * sum_dxhat_xhat.asDiagonal();
  dx = dx * (inv_std_ / m).asDiagonal();
  return Tensor<Scalar>(shape_, std::move(dx));
}

// ---------------------------------------------------------------- maxpool

/// Non-overlapping windows along time; a trailing partial window is pooled
/// over the samples it has.
template <class Scalar = double>
struct MaxPoolLayer {
  Index pool_size = 2;

  MaxPoolLayer() = default;
  explicit MaxPoolLayer(Index p) : pool_size(p) {
    require(p >= 1, ErrorKind::Parameter, "maxpool: pool size must be >= 1");
  }

  void init(std::mt19937_64&) {}
  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode);
  Tensor<Scalar> backward(const Tensor<Scalar>& grad);
  std::vector<ParamRef<Scalar>> params() { return {}; }
  std::vector<BufferRef<Scalar>> buffers() { return {}; }

 private:
  std::vector<Index> argmax_;  // source row per output element
  Shape in_shape_;
};

template <class Scalar>
Tensor<Scalar> maxpool1d(const Tensor<Scalar>& x, Index pool_size, std::vector<Index>* argmax = nullptr) {
  require(pool_size >= 1, ErrorKind::Parameter, "maxpool: pool size must be >= 1");
  require(x.rank() == 3, ErrorKind::Shape, "maxpool: input must be [B,M,N], got " + shape_string(x.shape()));
  const Index b_len = x.dim(0), m_len = x.dim(1), n_len = x.dim(2);
  const Index out_len = pool_output_size(m_len, pool_size);
  Tensor<Scalar> y({b_len, out_len, n_len});
  if (argmax) argmax->assign(static_cast<std::size_t>(y.size()), 0);
  const auto& xm = x.matrix();
  auto& ym = y.matrix();
  for (Index b = 0; b < b_len; ++b) {
    for (Index o = 0; o < out_len; ++o) {
      const Index begin = b * m_len + o * pool_size;
      const Index end = b * m_len + std::min(m_len, (o + 1) * pool_size);
      for (Index n = 0; n < n_len; ++n) {
        Index best = begin;
        for (Index r = begin + 1; r < end; ++r)
          if (xm(r, n) > xm(best, n)) best = r;
        ym(b * out_len + o, n) = xm(best, n);
        if (argmax) (*argmax)[static_cast<std::size_t>((b * out_len + o) * n_len + n)] = best;
      }
    }
  }
  return y;
}

template <class Scalar>
Tensor<Scalar> MaxPoolLayer<Scalar>::forward(const Tensor<Scalar>& x, Mode mode) {
  if (mode == Mode::Infer) return maxpool1d(x, pool_size);
  in_shape_ = x.shape();
  return maxpool1d(x, pool_size, &argmax_);
}

template <class Scalar>
Tensor<Scalar> MaxPoolLayer<Scalar>::backward(const Tensor<Scalar>& grad) {
  require(!in_shape_.empty(), ErrorKind::State, "maxpool: backward before forward");
  Tensor<Scalar> dx(in_shape_);
  const Index n_len = grad.dim(2);
  const auto& g = grad.matrix();
  for (Index i = 0; i < g.rows(); ++i)
    for (Index n = 0; n < n_len; ++n) dx.matrix()(argmax_[static_cast<std::size_t>(i * n_len + n)], n) += g(i, n);
  return dx;
}

// ---------------------------------------------------------------- dense

/// Weights [I,J] as an I x J matrix: y = x W + b.
template <class Scalar = double>
struct DenseLayer {
  Index inputs = 1;
  Index outputs = 1;
  RowMatrix<Scalar> weights;
  Vector<Scalar> bias;

  RowMatrix<Scalar> weight_grad;
  Vector<Scalar> bias_grad;

  DenseLayer() = default;
  DenseLayer(Index i, Index j) : inputs(i), outputs(j) {
    require(i >= 1 && j >= 1, ErrorKind::Parameter, "dense: I and J must be >= 1");
    weights = RowMatrix<Scalar>::Zero(i, j);
    bias = Vector<Scalar>::Zero(j);
    weight_grad = RowMatrix<Scalar>::Zero(i, j);
    bias_grad = Vector<Scalar>::Zero(j);
  }

  void init(std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(inputs + outputs));
    for (Index k = 0; k < weights.size(); ++k) weights.data()[k] = Scalar((2 * unit_uniform(rng) - 1) * limit);
    bias.setZero();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode);
  Tensor<Scalar> backward(const Tensor<Scalar>& grad);
  std::vector<ParamRef<Scalar>> params() {
    return {{"weights", weights.data(), weight_grad.data(), weights.size()},
            {"bias", bias.data(), bias_grad.data(), bias.size()}};
  }
  std::vector<BufferRef<Scalar>> buffers() { return {}; }

 private:
  RowMatrix<Scalar> input_;
};

template <class Scalar>
Tensor<Scalar> apply_activation(Tensor<Scalar> x, Activation act) {
  auto& m = x.matrix();
  if (act == Activation::Relu) m = m.cwiseMax(Scalar(0));
  if (act == Activation::LeakyRelu) m = m.unaryExpr([](Scalar v) { return leaky_relu(v); });
  return x;
}

/// y_j = f(sum_i w_ji x_i + b_j) for each row of a [B,I] input.
template <class Scalar>
Tensor<Scalar> dense_forward(const Tensor<Scalar>& x, const DenseLayer<Scalar>& layer,
                             Activation act = Activation::Linear) {
  require(x.rank() == 2 && x.dim(1) == layer.inputs, ErrorKind::Shape,
          "dense: input must be [B," + std::to_string(layer.inputs) + "], got " + shape_string(x.shape()));
  RowMatrix<Scalar> y = x.matrix() * layer.weights;
  y.rowwise() += layer.bias.transpose();
  return apply_activation(Tensor<Scalar>({x.dim(0), layer.outputs}, std::move(y)), act);
}

template <class Scalar>
Tensor<Scalar> DenseLayer<Scalar>::forward(const Tensor<Scalar>& x, Mode mode) {
  auto y = dense_forward(x, *this);
  if (mode == Mode::Train) input_ = x.matrix();
  return y;
}

template <class Scalar>
Tensor<Scalar> DenseLayer<Scalar>::backward(const Tensor<Scalar>& grad) {
  require(input_.rows() == grad.dim(0), ErrorKind::State, "dense: backward before forward");
  const auto& dy = grad.matrix();
  weight_grad.noalias() = input_.transpose() * dy;
  bias_grad = dy.colwise().sum().transpose();
  RowMatrix<Scalar> dx = dy * weights.transpose();
  return Tensor<Scalar>({dy.rows(), inputs}, std::move(dx));
}

// ---------------------------------------------------------------- activation

template <class Scalar = double>
struct ActivationLayer {
  Activation kind = Activation::Relu;

  ActivationLayer() = default;
  explicit ActivationLayer(Activation k) : kind(k) {}

  void init(std::mt19937_64&) {}
  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode) {
    if (mode == Mode::Train) input_ = x;
    return apply_activation(x, kind);
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& grad) {
    require(input_.size() == grad.size(), ErrorKind::State, "activation: backward before forward");
    Tensor<Scalar> dx = grad;
    const Scalar low = kind == Activation::Relu ? Scalar(0) : Scalar(kLeakySlope);
    if (kind != Activation::Linear)
      dx.matrix().array() *= input_.matrix().array().unaryExpr([low](Scalar v) { return v > 0 ? Scalar(1) : low; });
    return dx;
  }
  std::vector<ParamRef<Scalar>> params() { return {}; }
  std::vector<BufferRef<Scalar>> buffers() { return {}; }

 private:
  Tensor<Scalar> input_;
};

// ---------------------------------------------------------------- dropout

struct DropoutSpec {
  double retain_probability = 1.0;

  explicit DropoutSpec(double p = 1.0) : retain_probability(p) {
    require(p > 0 && p <= 1, ErrorKind::Parameter, "dropout: retain probability must be in (0,1]");
  }
};

template <class Scalar>
RowMatrix<Scalar> dropout_mask(Index rows, Index cols, const DropoutSpec& spec, std::mt19937_64& rng) {
  const double p = spec.retain_probability;
  RowMatrix<Scalar> mask(rows, cols);
  const Scalar keep = Scalar(1.0 / p);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = unit_uniform(rng) < p ? keep : Scalar(0);
  return mask;
}

/// Inverted dropout: in train mode each unit survives with probability p and
/// is scaled by 1/p; infer mode and p = 1 are the identity.
template <class Scalar>
Tensor<Scalar> dropout(const Tensor<Scalar>& x, const DropoutSpec& spec, Mode mode, std::uint64_t seed) {
  if (mode == Mode::Infer || spec.retain_probability == 1.0) return x;
  std::mt19937_64 rng(seed);
  Tensor<Scalar> y = x;
  y.matrix().array() *= dropout_mask<Scalar>(x.matrix().rows(), x.matrix().cols(), spec, rng).array();
  return y;
}

template <class Scalar = double>
struct DropoutLayer {
  DropoutSpec spec;

  DropoutLayer() = default;
  explicit DropoutLayer(DropoutSpec s) : spec(s) {}

  void init(std::mt19937_64&) {}
  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode, std::mt19937_64& rng) {
    if (mode == Mode::Infer || spec.retain_probability == 1.0) {
      mask_.resize(0, 0);
      return x;
    }
    mask_ = dropout_mask<Scalar>(x.matrix().rows(), x.matrix().cols(), spec, rng);
    Tensor<Scalar> y = x;
    y.matrix().array() *= mask_.array();
    return y;
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& grad) {
    if (mask_.size() == 0) return grad;
    Tensor<Scalar> dx = grad;
    dx.matrix().array() *= mask_.array();
    return dx;
  }
  std::vector<ParamRef<Scalar>> params() { return {}; }
  std::vector<BufferRef<Scalar>> buffers() { return {}; }

 private:
  RowMatrix<Scalar> mask_;
};

// ---------------------------------------------------------------- flatten

template <class Scalar = double>
struct FlattenLayer {
  void init(std::mt19937_64&) {}
  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode) {
    require(x.rank() >= 2, ErrorKind::Shape, "flatten: need a batch dimension");
    in_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / std::max<Index>(x.dim(0), 1)});
  }
  Tensor<Scalar> backward(const Tensor<Scalar>& grad) { return grad.reshaped(in_shape_); }
  std::vector<ParamRef<Scalar>> params() { return {}; }
  std::vector<BufferRef<Scalar>> buffers() { return {}; }

 private:
  Shape in_shape_;
};

}  // namespace egw::nn
