// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <Eigen/Core>

namespace egw::dsp {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Single-lead ECG recording, amplitudes in millivolts.
template <typename Scalar>
struct BasicEcgSignal {
  Vector<Scalar> samples;
  int sampling_rate = 0;

  Eigen::Index size() const { return samples.size(); }
  double duration_s() const { return static_cast<double>(samples.size()) / sampling_rate; }
};

using EcgSignal = BasicEcgSignal<double>;

}  // namespace egw::dsp
