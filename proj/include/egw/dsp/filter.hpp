// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include "egw/dsp/signal.hpp"

namespace egw::dsp {

struct FilterConfig {
  double band_low_hz = 0.5;
  double band_high_hz = 40.0;
  int ma_window = 3;
};

/// Zero-phase band-pass followed by a centred moving average.
///
/// The band-pass is a spectral mask over the whole record: bins outside
/// [band_low, band_high] are zeroed, which removes DC and mains pickup exactly
/// and leaves in-band content untouched. The moving average then smooths
/// residual broadband noise; ma_window = 1 disables it. Output has the input's
/// length and sampling rate.
EcgSignal preprocess(const EcgSignal& signal, double band_low_hz, double band_high_hz, int ma_window);

inline EcgSignal preprocess(const EcgSignal& signal, const FilterConfig& cfg) {
  return preprocess(signal, cfg.band_low_hz, cfg.band_high_hz, cfg.ma_window);
}

/// Centred moving average with edge samples replicated.
Vector<double> moving_average(const Vector<double>& x, int window);

}  // namespace egw::dsp
