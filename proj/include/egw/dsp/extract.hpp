// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <vector>

#include "egw/dsp/features.hpp"
#include "egw/dsp/filter.hpp"
#include "egw/dsp/signal.hpp"
#include "egw/dsp/waves.hpp"
#include "egw/dsp/wavelet.hpp"

namespace egw::dsp {

struct ExtractionConfig {
  FilterConfig filter{};
  int dwt_levels = 2;
  DetectionConfig detection{};
};

/// Everything the gateway keeps from one stretch of signal. The wavelet
/// coefficients (not raw samples) are the representation retained for storage.
struct Extraction {
  EcgSignal filtered;
  WaveletCoeffs coeffs;
  WaveMarks marks;
  std::vector<BeatFeatures> features;
  std::vector<double> heart_rate_bpm;
};

/// filter -> db4 decomposition -> wave detection -> per-beat features.
Extraction extract(const EcgSignal& signal, const ExtractionConfig& cfg = {});

}  // namespace egw::dsp
