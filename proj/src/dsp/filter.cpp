// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/dsp/filter.hpp"

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "egw/common/error.hpp"

namespace egw::dsp {

Vector<double> moving_average(const Vector<double>& x, int window) {
  require(window >= 1, ErrorKind::Parameter, "moving_average: window must be >= 1");
  const Eigen::Index n = x.size();
  if (window == 1 || n == 0) return x;
  const Eigen::Index left = (window - 1) / 2;
  const Eigen::Index right = window - 1 - left;

  // prefix sums over the edge-replicated sequence
  Vector<double> padded(n + left + right);
  padded.segment(left, n) = x;
  padded.head(left).setConstant(x[0]);
  padded.tail(right).setConstant(x[n - 1]);
  Vector<double> prefix(padded.size() + 1);
  prefix[0] = 0;
  for (Eigen::Index i = 0; i < padded.size(); ++i) prefix[i + 1] = prefix[i] + padded[i];

  Vector<double> out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = (prefix[i + window] - prefix[i]) / window;
  return out;
}

EcgSignal preprocess(const EcgSignal& signal, double band_low_hz, double band_high_hz, int ma_window) {
  require(signal.sampling_rate > 0, ErrorKind::Parameter, "preprocess: sampling rate must be positive");
  require(signal.size() > 0, ErrorKind::EmptyInput, "preprocess: empty signal");
  const double nyquist = signal.sampling_rate / 2.0;
  require(band_low_hz > 0 && band_low_hz < band_high_hz && band_high_hz < nyquist, ErrorKind::Parameter,
          "preprocess: band must satisfy 0 < low < high < fs/2");
  require(ma_window >= 1, ErrorKind::Parameter, "preprocess: ma_window must be >= 1");

  const auto n = static_cast<std::size_t>(signal.size());
  std::vector<double> time(signal.samples.data(), signal.samples.data() + n);
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, time);

  const double bin_hz = static_cast<double>(signal.sampling_rate) / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = static_cast<double>(std::min(k, n - k)) * bin_hz;
    if (f < band_low_hz || f > band_high_hz) spectrum[k] = 0.0;
  }
  fft.inv(time, spectrum);

  EcgSignal out;
  out.sampling_rate = signal.sampling_rate;
  out.samples = Eigen::Map<const Vector<double>>(time.data(), static_cast<Eigen::Index>(n));
  out.samples = moving_average(out.samples, ma_window);
  return out;
}

}  // namespace egw::dsp
