// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <doctest.h>

#include <cmath>
#include <random>

#include "egw/nn/nn.hpp"

using namespace egw;
using namespace egw::nn;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Tensor<double> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = d(rng);
  return t;
}

Conv1DLayer<double> random_conv(Index q, Index n, Index f, Index s, Padding pad, std::mt19937_64& rng) {
  Conv1DLayer<double> c(q, n, f, s, pad);
  std::normal_distribution<double> d;
  for (Index i = 0; i < c.weights.size(); ++i) c.weights.data()[i] = d(rng);
  for (Index i = 0; i < c.bias.size(); ++i) c.bias[i] = d(rng);
  return c;
}

// Independent sliding-window oracle, written from the convolution sum.
Tensor<double> conv_oracle(const Tensor<double>& x, const Conv1DLayer<double>& c) {
  const Index b_len = x.dim(0), m_len = x.dim(1), n_len = x.dim(2);
  Index r_len, left = 0;
  if (c.padding == Padding::None) {
    r_len = (m_len - c.receptive_field) / c.stride + 1;
  } else {
    r_len = (m_len + c.stride - 1) / c.stride;
    const Index total = std::max<Index>((r_len - 1) * c.stride + c.receptive_field - m_len, 0);
    left = total / 2;
  }
  Tensor<double> y({b_len, r_len, c.filters});
  for (Index b = 0; b < b_len; ++b)
    for (Index r = 0; r < r_len; ++r)
      for (Index f = 0; f < c.filters; ++f) {
        double acc = c.bias[f];
        for (Index q = 0; q < c.receptive_field; ++q)
          for (Index n = 0; n < n_len; ++n) {
            const Index m = r * c.stride + q - left;
            if (m >= 0 && m < m_len) acc += c.weight(q, n, f) * x.at(b, m, n);
          }
        y.at(b, r, f) = acc;
      }
  return y;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.shape() == b.shape());
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

Sequential<double> tiny_net(std::uint64_t seed) {
  Sequential<double> net;
  net.add(BatchNormLayer<double>(2));
  net.add(Conv1DLayer<double>(2, 2, 2));
  net.add(ActivationLayer<double>(Activation::Relu));
  net.add(DropoutLayer<double>(DropoutSpec(0.7)));
  net.add(MaxPoolLayer<double>(2));
  net.add(FlattenLayer<double>());
  net.add(DenseLayer<double>(8, 4));
  net.add(ActivationLayer<double>(Activation::LeakyRelu));
  net.add(DenseLayer<double>(4, 3));
  net.init(seed);
  return net;
}

}  // namespace

TEST_CASE("tensor shape contract") {
  auto t = Tensor<double>::from({2, 3, 1}, {1, 2, 3, 4, 5, 6});
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2, 0) == 6);
  CHECK_THROWS_AS(Tensor<double>::from({2, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor<double>::from({1}, {std::nan("")}), Error);
  auto r = t.reshaped({2, 3});
  CHECK(r.matrix()(1, 0) == 4);
  CHECK_THROWS_AS(t.reshaped({4, 2}), Error);
}

TEST_CASE("conv1d hand example and identity kernel") {
  auto x = Tensor<double>::from({1, 3, 1}, {1, 2, 3});
  Conv1DLayer<double> c(2, 1, 1, 1, Padding::None);
  c.weights << 1, 1;
  auto y = conv1d_forward(x, c);
  REQUIRE(y.shape() == Shape{1, 2, 1});
  CHECK(y[0] == 3);
  CHECK(y[1] == 5);

  std::mt19937_64 rng(1);
  auto xi = random_tensor({3, 11, 1}, rng);
  Conv1DLayer<double> id(1, 1, 1, 1, Padding::None);
  id.weights << 1;
  CHECK(max_abs_diff(conv1d_forward(xi, id), xi) == 0.0);
}

TEST_CASE("conv1d matches sliding-window oracle") {
  std::mt19937_64 rng(7);
  auto x = random_tensor({1, 16, 2}, rng);
  auto c = random_conv(3, 2, 4, 1, Padding::None, rng);
  CHECK(max_abs_diff(conv1d_forward(x, c), conv_oracle(x, c)) < 1e-12);

  std::uniform_int_distribution<Index> pick(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const Index q = pick(rng), n = pick(rng), f = pick(rng), s = std::min<Index>(pick(rng), 3);
    const Index m = q + pick(rng) * 3;
    const Padding pad = trial % 2 ? Padding::Same : Padding::None;
    auto xt = random_tensor({pick(rng), m, n}, rng);
    auto ct = random_conv(q, n, f, s, pad, rng);
    CHECK(max_abs_diff(conv1d_forward(xt, ct), conv_oracle(xt, ct)) < 1e-12);
  }
}

TEST_CASE("conv1d rejects channel mismatch") {
  Conv1DLayer<double> c(2, 3, 1);
  CHECK_THROWS_AS(conv1d_forward(Tensor<double>({1, 5, 2}), c), Error);
  try {
    conv1d_forward(Tensor<double>({1, 5, 2}), c);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("output size rules") {
  CHECK(literal_output_size(187, 2, 1) == 188);
  CHECK(conv_output_size(187, 2, 1, Padding::Same) == 187);
  CHECK(conv_output_size(10, 2, 1, Padding::None) == 9);
  CHECK_THROWS_AS(conv_output_size(3, 4, 1, Padding::None), Error);
  for (Index m = 1; m <= 40; ++m)
    for (Index k = 1; k <= 5; ++k)
      for (Index s = 1; s <= 4; ++s) {
        const Index num = m - (k - 1) + 2;
        CHECK(literal_output_size(m, k, s) == static_cast<Index>(std::floor(static_cast<double>(num) / s)));
      }
}

TEST_CASE("batchnorm hand example, zero gamma, statistics") {
  BatchNormLayer<double> bn(1);
  auto y = bn.forward(Tensor<double>::from({2, 1}, {2, 4}), Mode::Train);
  const double expect = 1 / std::sqrt(1 + 1e-5);
  CHECK(y[0] == doctest::Approx(-expect).epsilon(1e-14));
  CHECK(y[1] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.999995).epsilon(1e-6));

  BatchNormLayer<double> z(3);
  z.gamma.setZero();
  z.beta << 0.5, -1, 2;
  std::mt19937_64 rng(3);
  auto out = z.forward(random_tensor({4, 6, 3}, rng), Mode::Train);
  for (Index r = 0; r < out.matrix().rows(); ++r) CHECK(out.matrix().row(r) == z.beta.transpose());

  BatchNormLayer<double> s(5);
  auto x = random_tensor({64, 10, 5}, rng, 3.0);
  x.matrix().rowwise() += Eigen::RowVectorXd::LinSpaced(5, -4, 4);
  auto n = s.forward(x, Mode::Train);
  for (Index f = 0; f < 5; ++f) {
    const auto col = n.matrix().col(f);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1) < 1e-4);
  }
}

TEST_CASE("batchnorm running statistics and inference") {
  BatchNormLayer<double> bn(2);
  CHECK_THROWS_AS(bn.forward(Tensor<double>({1, 2}), Mode::Infer), Error);
  std::mt19937_64 rng(5);
  auto x = random_tensor({8, 2}, rng);
  bn.forward(x, Mode::Train);
  const Eigen::Vector2d mean = x.matrix().colwise().mean().transpose();
  CHECK((bn.running_mean - 0.1 * mean).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((bn.running_var.array() >= 0).all());
  auto a = bn.forward(x, Mode::Infer);
  auto b = bn.forward(x, Mode::Infer);
  CHECK(a.matrix() == b.matrix());
  CHECK_THROWS_AS(BatchNormLayer<double>(1, 0.0), Error);
}

TEST_CASE("maxpool examples and oracle") {
  auto y = maxpool1d(Tensor<double>::from({1, 4, 1}, {1, 3, 2, 5}), 2);
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 3);
  CHECK(y[1] == 5);

  std::mt19937_64 rng(11);
  auto x = random_tensor({1, 100, 1}, rng);
  CHECK(max_abs_diff(maxpool1d(x, 1), x) == 0);
  auto p = maxpool1d(x, 2);
  for (Index i = 0; i < 50; ++i) CHECK(p[i] == std::max(x[2 * i], x[2 * i + 1]));

  for (Index len = 1; len < 30; ++len)
    for (Index pool = 1; pool < 6; ++pool) {
      auto t = random_tensor({2, len, 3}, rng);
      auto out = maxpool1d(t, pool);
      CHECK(out.dim(1) == (len + pool - 1) / pool);
      const Index last = out.dim(1) - 1;
      double tail = -1e300;
      for (Index m = last * pool; m < len; ++m) tail = std::max(tail, t.at(1, m, 2));
      CHECK(out.at(1, last, 2) == tail);
    }
}

TEST_CASE("dense examples and oracle") {
  DenseLayer<double> id(3, 3);
  id.weights.setIdentity();
  auto x = Tensor<double>::from({2, 3}, {1, -2, 3, 0.5, 0, -7});
  CHECK(max_abs_diff(dense_forward(x, id), x) == 0);

  DenseLayer<double> d(2, 1);
  d.weights << 1, 1;
  d.bias << 0.5;
  CHECK(dense_forward(Tensor<double>::from({1, 2}, {1, 1}), d)[0] == 2.5);

  std::mt19937_64 rng(13);
  DenseLayer<double> r(7, 5);
  r.init(rng);
  r.bias = Eigen::VectorXd::Random(5);
  auto in = random_tensor({4, 7}, rng);
  auto out = dense_forward(in, r);
  double worst = 0;
  for (Index b = 0; b < 4; ++b)
    for (Index j = 0; j < 5; ++j) {
      double acc = r.bias[j];
      for (Index i = 0; i < 7; ++i) acc += r.weights(i, j) * in.matrix()(b, i);
      worst = std::max(worst, std::abs(acc - out.matrix()(b, j)));
    }
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS(dense_forward(Tensor<double>({1, 6}), r), Error);
}

TEST_CASE("leaky relu branches") {
  CHECK(leaky_relu(2.0) == 2.0);
  CHECK(leaky_relu(-1.0) == -0.01);
  CHECK(leaky_relu(0.0) == 0.0);
}

TEST_CASE("softmax argmax and normalisation") {
  Eigen::VectorXd v(5);
  v << 0, 0, 0, 0, 10;
  CHECK(softmax_argmax(v) == 4);
  CHECK(softmax_argmax(Eigen::VectorXd::Zero(5)) == 0);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> d(0, 20);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd y(5);
    for (auto& e : y) e = d(rng);
    Index direct = 0;
    for (Index k = 1; k < 5; ++k)
      if (y[k] > y[direct]) direct = k;
    CHECK(softmax_argmax(y) == direct);
    RowMatrix<double> row = y.transpose();
    auto p = softmax(row);
    CHECK((p.array() > 0).all());
    CHECK(std::abs(p.sum() - 1) < 1e-9);
  }
}

TEST_CASE("dropout modes and keep fraction") {
  std::mt19937_64 rng(19);
  auto x = random_tensor({10, 7}, rng);
  CHECK(max_abs_diff(dropout(x, DropoutSpec(1.0), Mode::Train, 1), x) == 0);
  CHECK(max_abs_diff(dropout(x, DropoutSpec(0.3), Mode::Infer, 1), x) == 0);
  CHECK_THROWS_AS(DropoutSpec(0.0), Error);
  CHECK_THROWS_AS(DropoutSpec(1.5), Error);

  Tensor<double> ones({1, 100000});
  ones.matrix().setOnes();
  auto y = dropout(ones, DropoutSpec(0.5), Mode::Train, 42);
  const double kept = static_cast<double>((y.matrix().array() != 0).count()) / 1e5;
  CHECK(std::abs(kept - 0.5) < 0.01);
  CHECK(((y.matrix().array() == 0) || (y.matrix().array() == 2.0)).all());
  CHECK(max_abs_diff(y, dropout(ones, DropoutSpec(0.5), Mode::Train, 42)) == 0);
}

TEST_CASE("gradient check on tiny network") {
  auto net = tiny_net(23);
  std::mt19937_64 rng(29);
  auto x = random_tensor({5, 8, 2}, rng);
  const std::vector<int> labels{0, 1, 2, 1, 0};
  auto report = gradient_check(net, x, labels, 31);
  INFO("worst at " << report.worst);
  CHECK(report.checked == net.parameter_count() + x.size());
  CHECK(report.max_relative_error < 1e-4);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  auto net = tiny_net(37);
  std::vector<std::vector<double>> before;
  for (auto& p : net.params()) before.emplace_back(p.value, p.value + p.size);
  Sgd<double> opt(0.0, 0.9);
  std::mt19937_64 rng(41);
  for (int i = 0; i < 3; ++i) backward_and_sgd_step(net, opt, random_tensor({4, 8, 2}, rng), {0, 1, 2, 0});
  auto ps = net.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    CHECK(std::memcmp(ps[i].value, before[i].data(), sizeof(double) * before[i].size()) == 0);
}

TEST_CASE("toy problem loss decreases over every 50-step window") {
  Sequential<double> net(3);
  net.add(Conv1DLayer<double>(2, 1, 4));
  net.add(ActivationLayer<double>(Activation::Relu));
  net.add(MaxPoolLayer<double>(2));
  net.add(FlattenLayer<double>());
  net.add(DenseLayer<double>(16, 2));
  net.init(43);

  // class 0: rising ramp, class 1: falling ramp, plus small noise
  std::mt19937_64 rng(47);
  std::normal_distribution<double> noise(0, 0.05);
  Tensor<double> x({16, 8, 1});
  std::vector<int> labels(16);
  for (Index b = 0; b < 16; ++b) {
    labels[static_cast<std::size_t>(b)] = static_cast<int>(b % 2);
    for (Index m = 0; m < 8; ++m) x.at(b, m, 0) = (b % 2 ? 7 - m : m) / 7.0 + noise(rng);
  }
  Sgd<double> opt(0.05, 0.9);
  std::vector<double> losses;
  for (int step = 0; step < 200; ++step) losses.push_back(backward_and_sgd_step(net, opt, x, labels));
  for (std::size_t i = 50; i < losses.size(); ++i) CHECK(losses[i] < losses[i - 50]);
  CHECK(losses.back() < 0.05);
}

TEST_CASE("non-finite loss aborts training") {
  auto net = tiny_net(53);
  Sgd<double> opt(0.1);
  Tensor<double> x({2, 8, 2});
  x[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(backward_and_sgd_step(net, opt, x, {0, 1}), Error);
}

TEST_CASE("float instantiation runs") {
  Sequential<float> net(1);
  net.add(Conv1DLayer<float>(2, 1, 3));
  net.add(ActivationLayer<float>(Activation::Relu));
  net.add(FlattenLayer<float>());
  net.add(DenseLayer<float>(18, 2));
  net.init(2);
  Tensor<float> x({2, 6, 1});
  x.matrix().setRandom();
  Sgd<float> opt(0.01f, 0.9f);
  CHECK(std::isfinite(backward_and_sgd_step(net, opt, x, {0, 1})));
  CHECK(predict_classes(net, x).size() == 2);
}
