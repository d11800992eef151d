// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <string>
#include <vector>

#include "egw/common/error.hpp"
#include "egw/dsp/signal.hpp"

namespace egw::dsp {

/// Daubechies-4 (four vanishing moments, eight taps) scaling filter, the
/// synthesis low-pass of the orthonormal filter bank. Sum of squares is 1.
inline constexpr std::array<long double, 8> kDb4Lowpass = {
    0.23037781330889650086L,  0.71484657055291564709L,  0.63088076792985890788L,
    -0.027983769416859854211L, -0.18703481171909308408L, 0.030841381835560763627L,
    0.032883011666885199735L,  -0.010597401785069032105L,
};

/// Quadrature mirror: g[k] = (-1)^k h[L-1-k].
template <typename Scalar>
std::array<Scalar, 8> db4_highpass() {
  std::array<Scalar, 8> g{};
  for (std::size_t k = 0; k < 8; ++k) {
    auto v = static_cast<Scalar>(kDb4Lowpass[7 - k]);
    g[k] = (k % 2 == 0) ? v : -v;
  }
  return g;
}

template <typename Scalar>
std::array<Scalar, 8> db4_lowpass() {
  std::array<Scalar, 8> h{};
  for (std::size_t k = 0; k < 8; ++k) h[k] = static_cast<Scalar>(kDb4Lowpass[k]);
  return h;
}

template <typename Scalar>
struct WaveletLevel {
  Vector<Scalar> approx;
  Vector<Scalar> detail;
};

template <typename Scalar>
struct BasicWaveletCoeffs {
  std::vector<WaveletLevel<Scalar>> levels;  // levels[0] is the finest
  std::string wavelet_id = "db4";
  Eigen::Index original_length = 0;

  const Vector<Scalar>& final_approx() const { return levels.back().approx; }
};

using WaveletCoeffs = BasicWaveletCoeffs<double>;

/// Band length after one decomposition step.
constexpr Eigen::Index half_length(Eigen::Index n) { return (n + 1) / 2; }

namespace detail {

// One analysis step on an even-length buffer with periodic wrap.
template <typename Scalar>
void analyze_step(const Vector<Scalar>& x, Vector<Scalar>& approx, Vector<Scalar>& detail) {
  const auto h = db4_lowpass<Scalar>();
  const auto g = db4_highpass<Scalar>();
  const Eigen::Index n = x.size();
  const Eigen::Index half = n / 2;
  approx.setZero(half);
  detail.setZero(half);
  for (Eigen::Index i = 0; i < half; ++i) {
    Scalar a = 0, d = 0;
    for (Eigen::Index k = 0; k < 8; ++k) {
      const Scalar v = x[(2 * i + k) % n];
      a += h[static_cast<std::size_t>(k)] * v;
      d += g[static_cast<std::size_t>(k)] * v;
    }
    approx[i] = a;
    detail[i] = d;
  }
}

template <typename Scalar>
Vector<Scalar> synthesize_step(const Vector<Scalar>& approx, const Vector<Scalar>& detail) {
  const auto h = db4_lowpass<Scalar>();
  const auto g = db4_highpass<Scalar>();
  const Eigen::Index half = approx.size();
  const Eigen::Index n = 2 * half;
  Vector<Scalar> x = Vector<Scalar>::Zero(n);
  for (Eigen::Index i = 0; i < half; ++i) {
    for (Eigen::Index k = 0; k < 8; ++k) {
      x[(2 * i + k) % n] += h[static_cast<std::size_t>(k)] * approx[i] +
                            g[static_cast<std::size_t>(k)] * detail[i];
    }
  }
  return x;
}

}  // namespace detail

/// Multi-level db4 decomposition. Each level halves the band length
/// (ceil(n/2)); an odd-length band is extended by mirroring its last sample
/// before the periodised filter bank runs, so reconstruction is exact.
template <typename Derived>
BasicWaveletCoeffs<typename Derived::Scalar> dwt(const Eigen::MatrixBase<Derived>& signal, int num_levels) {
  using Scalar = typename Derived::Scalar;
  require(num_levels >= 1, ErrorKind::Parameter, "dwt: num_levels must be >= 1");
  const Eigen::Index n = signal.size();
  require(n >= (Eigen::Index{1} << num_levels), ErrorKind::Parameter,
          "dwt: signal of length " + std::to_string(n) + " too short for " +
              std::to_string(num_levels) + " levels");

  BasicWaveletCoeffs<Scalar> out;
  out.original_length = n;
  Vector<Scalar> current = signal;
  for (int level = 0; level < num_levels; ++level) {
    const Eigen::Index len = current.size();
    Vector<Scalar> padded;
    if (len % 2 == 1) {
      padded.resize(len + 1);
      padded.head(len) = current;
      padded[len] = current[len - 1];
    } else {
      padded = current;
    }
    WaveletLevel<Scalar> lvl;
    detail::analyze_step(padded, lvl.approx, lvl.detail);
    current = lvl.approx;
    out.levels.push_back(std::move(lvl));
  }
  return out;
}

/// Inverse of dwt(); rebuilds a signal of original_length.
template <typename Scalar>
Vector<Scalar> idwt(const BasicWaveletCoeffs<Scalar>& coeffs) {
  require(!coeffs.levels.empty(), ErrorKind::Structure, "idwt: no decomposition levels");
  require(coeffs.original_length >= 1, ErrorKind::Structure, "idwt: original_length must be positive");

  std::vector<Eigen::Index> lengths{coeffs.original_length};
  for (std::size_t i = 0; i < coeffs.levels.size(); ++i) lengths.push_back(half_length(lengths.back()));
  for (std::size_t i = 0; i < coeffs.levels.size(); ++i) {
    const auto& lvl = coeffs.levels[i];
    require(lvl.detail.size() == lengths[i + 1] && lvl.approx.size() == lengths[i + 1],
            ErrorKind::Structure,
            "idwt: level " + std::to_string(i + 1) + " band length does not match ceil(n/2) = " +
                std::to_string(lengths[i + 1]));
  }

  Vector<Scalar> current = coeffs.levels.back().approx;
  for (std::size_t i = coeffs.levels.size(); i-- > 0;) {
    Vector<Scalar> rebuilt = detail::synthesize_step(current, coeffs.levels[i].detail);
    current = rebuilt.head(lengths[i]);
  }
  return current;
}

/// Fraction of samples saved when only the deepest approximation band is
/// transmitted.
double coeff_payload_reduction(Eigen::Index signal_len, int num_levels);

}  // namespace egw::dsp
