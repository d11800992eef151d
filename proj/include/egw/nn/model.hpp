// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "egw/nn/layers.hpp"

namespace egw::nn {

// ---------------------------------------------------------------- softmax

/// Row-wise softmax with max subtraction.
template <class Scalar>
RowMatrix<Scalar> softmax(const RowMatrix<Scalar>& logits) {
  RowMatrix<Scalar> p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

/// Index of the largest softmax probability; ties go to the lowest index.
template <class Derived>
Index softmax_argmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = logits.reshaped();
  const Scalar top = v.maxCoeff();
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p = (v.array() - top).exp();
  Index best = 0;
  for (Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return best;
}

/// Mean categorical cross-entropy over the batch and its gradient with
/// respect to the logits.
template <class Scalar>
std::pair<Scalar, Tensor<Scalar>> softmax_cross_entropy(const Tensor<Scalar>& logits, const std::vector<int>& labels) {
  const auto& z = logits.matrix();
  require(logits.rank() == 2 && z.rows() == static_cast<Index>(labels.size()), ErrorKind::Shape,
          "cross_entropy: " + std::to_string(labels.size()) + " labels for logits " + shape_string(logits.shape()));
  require(z.rows() > 0, ErrorKind::EmptyInput, "cross_entropy: empty batch");
  RowMatrix<Scalar> shifted = z.colwise() - z.rowwise().maxCoeff();
  const Vector<Scalar> log_norm = shifted.array().exp().rowwise().sum().log();
  RowMatrix<Scalar> grad = shifted.array().exp().colwise() / log_norm.array().exp();
  Scalar loss = 0;
  for (Index i = 0; i < z.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < z.cols(), ErrorKind::Parameter, "cross_entropy: label out of range");
    loss += log_norm[i] - shifted(i, y);
    grad(i, y) -= Scalar(1);
  }
  const Scalar b = Scalar(z.rows());
  grad /= b;
  return {loss / b, Tensor<Scalar>(logits.shape(), std::move(grad))};
}

// ---------------------------------------------------------------- sequential

template <class Scalar = double>
using Layer = std::variant<Conv1DLayer<Scalar>, BatchNormLayer<Scalar>, MaxPoolLayer<Scalar>, DenseLayer<Scalar>,
                           ActivationLayer<Scalar>, DropoutLayer<Scalar>, FlattenLayer<Scalar>>;

/// Pure single-layer inference; no cached state is touched.
template <class Scalar>
Tensor<Scalar> infer_layer(const Layer<Scalar>& layer, const Tensor<Scalar>& x) {
  return std::visit(
      [&](const auto& l) -> Tensor<Scalar> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, Conv1DLayer<Scalar>>) return conv1d_forward(x, l);
        else if constexpr (std::is_same_v<L, BatchNormLayer<Scalar>>) return batchnorm_infer(x, l);
        else if constexpr (std::is_same_v<L, MaxPoolLayer<Scalar>>) return maxpool1d(x, l.pool_size);
        else if constexpr (std::is_same_v<L, DenseLayer<Scalar>>) return dense_forward(x, l);
        else if constexpr (std::is_same_v<L, ActivationLayer<Scalar>>) return apply_activation(x, l.kind);
        else if constexpr (std::is_same_v<L, DropoutLayer<Scalar>>) return x;
        else return x.reshaped({x.dim(0), x.size() / std::max<Index>(x.dim(0), 1)});
      },
      layer);
}

/// Ordered layer stack. Training calls mutate cached activations and must be
/// serialised per instance; infer() is const and safe to share.
template <class Scalar = double>
class Sequential {
 public:
  using scalar_type = Scalar;

  explicit Sequential(std::uint64_t seed = 0) : rng_(seed) {}

  template <class L>
  L& add(L layer) {
    layers_.emplace_back(std::move(layer));
    return std::get<L>(layers_.back());
  }

  /// Xavier-uniform weights, zero biases, drawn in layer order from the seed.
  void init(std::uint64_t seed) {
    rng_.seed(seed);
    for (auto& l : layers_) std::visit([&](auto& v) { v.init(rng_); }, l);
  }

  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode) {
    Tensor<Scalar> h = x;
    for (auto& l : layers_) {
      h = std::visit(
          [&](auto& v) -> Tensor<Scalar> {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DropoutLayer<Scalar>>)
              return v.forward(h, mode, rng_);
            else
              return v.forward(h, mode);
          },
          l);
    }
    return h;
  }

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const {
    Tensor<Scalar> h = x;
    for (const auto& l : layers_) h = infer_layer(l, h);
    return h;
  }

  /// Propagates dL/dlogits back through every layer, filling parameter grads.
  /// Returns dL/dinput.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad) {
    Tensor<Scalar> g = grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      g = std::visit([&](auto& v) { return v.backward(g); }, *it);
    return g;
  }

  std::vector<ParamRef<Scalar>> params() {
    std::vector<ParamRef<Scalar>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      for (auto p : std::visit([](auto& v) { return v.params(); }, layers_[i])) {
        p.name = std::to_string(i) + "." + p.name;
        out.push_back(p);
      }
    }
    return out;
  }

  std::vector<BufferRef<Scalar>> buffers() {
    std::vector<BufferRef<Scalar>> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      for (auto b : std::visit([](auto& v) { return v.buffers(); }, layers_[i])) {
        b.name = std::to_string(i) + "." + b.name;
        out.push_back(b);
      }
    }
    return out;
  }

  Index parameter_count() {
    Index n = 0;
    for (const auto& p : params()) n += p.size;
    return n;
  }

  std::vector<Layer<Scalar>>& layers() { return layers_; }
  const std::vector<Layer<Scalar>>& layers() const { return layers_; }

 private:
  std::vector<Layer<Scalar>> layers_;
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------- optimiser

/// SGD with classical momentum: v <- mu v - lr g; w <- w + v.
template <class Scalar = double>
class Sgd {
 public:
  explicit Sgd(Scalar learning_rate, Scalar momentum = Scalar(0)) : lr_(learning_rate), momentum_(momentum) {
    require(learning_rate >= 0 && std::isfinite(static_cast<double>(learning_rate)), ErrorKind::Parameter,
            "sgd: learning rate must be finite and >= 0");
    require(momentum >= 0 && momentum < 1, ErrorKind::Parameter, "sgd: momentum must be in [0,1)");
  }

  void step(Sequential<Scalar>& model) {
    auto ps = model.params();
    if (velocity_.size() != ps.size()) {
      velocity_.clear();
      for (const auto& p : ps) velocity_.push_back(Vector<Scalar>::Zero(p.size));
    }
    for (std::size_t i = 0; i < ps.size(); ++i) {
      Eigen::Map<Vector<Scalar>> w(ps[i].value, ps[i].size);
      Eigen::Map<const Vector<Scalar>> g(ps[i].grad, ps[i].size);
      velocity_[i] = momentum_ * velocity_[i] - lr_ * g;
      w += velocity_[i];
    }
  }

  Scalar learning_rate() const { return lr_; }
  void set_learning_rate(Scalar lr) { lr_ = lr; }

 private:
  Scalar lr_;
  Scalar momentum_;
  std::vector<Vector<Scalar>> velocity_;
};

/// Forward in train mode, cross-entropy, backward, one optimiser step.
/// Returns the loss before the update.
template <class Scalar>
Scalar backward_and_sgd_step(Sequential<Scalar>& model, Sgd<Scalar>& opt, const Tensor<Scalar>& batch,
                             const std::vector<int>& labels) {
  const Tensor<Scalar> logits = model.forward(batch, Mode::Train);
  auto [loss, grad] = softmax_cross_entropy(logits, labels);
  require(std::isfinite(static_cast<double>(loss)), ErrorKind::Training,
          "training diverged: loss is " + std::to_string(static_cast<double>(loss)));
  model.backward(grad);
  opt.step(model);
  return loss;
}

/// Per-row argmax of the model's logits in inference mode.
template <class Scalar>
std::vector<int> predict_classes(const Sequential<Scalar>& model, const Tensor<Scalar>& batch) {
  const auto logits = model.infer(batch);
  std::vector<int> out(static_cast<std::size_t>(logits.dim(0)));
  for (Index i = 0; i < logits.dim(0); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(softmax_argmax(logits.matrix().row(i)));
  return out;
}

}  // namespace egw::nn
