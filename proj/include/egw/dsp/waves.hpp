// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <optional>
#include <vector>

#include "egw/dsp/signal.hpp"

namespace egw::dsp {

struct WaveMarks {
  std::vector<Eigen::Index> r_peaks;
  std::vector<Eigen::Index> p_peaks;
  std::vector<Eigen::Index> t_peaks;
};

/// Detection thresholds (mV) and search windows (ms relative to each R peak).
struct DetectionConfig {
  double r_threshold_mv = 1.0;
  double p_threshold_mv = 0.08;
  double t_threshold_mv = 0.1;
  double refractory_ms = 200.0;
  double p_window_begin_ms = -240.0;
  double p_window_end_ms = -40.0;
  double t_window_begin_ms = 80.0;
  double t_window_end_ms = 400.0;
};

/// Threshold-based R/P/T detection. Amplitudes are measured against the
/// isoelectric level (the signal median), since band-passing leaves the
/// baseline offset by the beat's mean area. R peaks are local maxima above the R
/// threshold, accepted greedily by amplitude so that no two are closer than
/// the refractory period. For each R peak the tallest local maximum above the
/// P (resp. T) threshold inside its window becomes the P (resp. T) mark.
WaveMarks detect_waves(const EcgSignal& signal, const DetectionConfig& cfg = {});

WaveMarks detect_waves(const EcgSignal& signal, double r_threshold_mv, double p_threshold_mv,
                       double t_threshold_mv, double refractory_ms);

/// Median of the samples; the reference level wave amplitudes are measured from.
double isoelectric_level(const EcgSignal& signal);

/// Beat-to-beat heart rate, 60 / RR seconds. Empty for fewer than two peaks.
std::vector<double> heart_rate(const std::vector<Eigen::Index>& r_peaks, int sampling_rate);

}  // namespace egw::dsp
