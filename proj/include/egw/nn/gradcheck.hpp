// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "egw/nn/model.hpp"

namespace egw::nn {

struct GradientReport {
  double max_relative_error = 0;
  std::string worst;  // "<param>[<index>]" or "input[<index>]"
  Index checked = 0;
};

/// Compares backprop gradients of the mean cross-entropy against central
/// differences for every parameter and every input element. The random
/// stream is reseeded before each forward so dropout masks stay fixed.
/// Relative error is |a-n| / max(|a|+|n|, floor).
inline GradientReport gradient_check(Sequential<double>& model, const Tensor<double>& batch,
                                     const std::vector<int>& labels, std::uint64_t seed, double h = 1e-5,
                                     double floor = 1e-7) {
  auto loss_at = [&](const Tensor<double>& x) {
    model.reseed(seed);
    return softmax_cross_entropy(model.forward(x, Mode::Train), labels).first;
  };

  model.reseed(seed);
  auto [loss, grad] = softmax_cross_entropy(model.forward(batch, Mode::Train), labels);
  const Tensor<double> input_grad = model.backward(grad);

  GradientReport report;
  auto compare = [&](double analytic, double numeric, const std::string& where) {
    const double err = std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
    ++report.checked;
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst = where;
    }
  };

  for (auto& p : model.params()) {
    const std::vector<double> analytic(p.grad, p.grad + p.size);
    for (Index i = 0; i < p.size; ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double up = loss_at(batch);
      p.value[i] = saved - h;
      const double down = loss_at(batch);
      p.value[i] = saved;
      compare(analytic[static_cast<std::size_t>(i)], (up - down) / (2 * h), p.name + "[" + std::to_string(i) + "]");
    }
  }

  Tensor<double> x = batch;
  for (Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = loss_at(x);
    x[i] = saved - h;
    const double down = loss_at(x);
    x[i] = saved;
    compare(input_grad[i], (up - down) / (2 * h), "input[" + std::to_string(i) + "]");
  }
  return report;
}

}  // namespace egw::nn
