// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/dsp/extract.hpp"

namespace egw::dsp {

Extraction extract(const EcgSignal& signal, const ExtractionConfig& cfg) {
  Extraction out;
  out.filtered = preprocess(signal, cfg.filter);
  int levels = cfg.dwt_levels;
  while (levels > 1 && out.filtered.size() < (Eigen::Index{1} << levels)) --levels;
  if (out.filtered.size() >= 2) out.coeffs = dwt(out.filtered.samples, levels);
  out.marks = detect_waves(out.filtered, cfg.detection);
  out.features = extract_features(out.filtered, out.marks, cfg.detection);
  out.heart_rate_bpm = heart_rate(out.marks.r_peaks, signal.sampling_rate);
  return out;
}

}  // namespace egw::dsp
