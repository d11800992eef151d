// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "egw/dsp/signal.hpp"
#include "egw/dsp/waves.hpp"

namespace egw::dsp {

/// Clinical features of one beat. A feature whose landmark could not be found
/// is absent, never zero.
struct BeatFeatures {
  std::optional<double> qrs_duration_ms;
  std::optional<double> t_wave_duration_ms;
  std::optional<double> rr_interval_s;
  std::optional<double> pr_interval_ms;
  std::optional<double> st_segment_ms;
  std::optional<double> heart_rate_bpm;

  static constexpr std::size_t kCount = 6;
  /// Fixed field order: qrs, t, rr, pr, st, hr.
  std::array<std::optional<double>, kCount> as_array() const {
    return {qrs_duration_ms, t_wave_duration_ms, rr_interval_s, pr_interval_ms, st_segment_ms, heart_rate_bpm};
  }
};

/// Landmark conventions used by extract_features:
///   Q = minimum in [R-80 ms, R), S = minimum in (R, R+80 ms];
///   QRS duration = S - Q; PR interval = Q - P;
///   T onset/offset = nearest samples around the T peak where the signal
///   falls to half the T amplitude above the isoelectric level; T duration = offset - onset;
///   ST segment = T onset - S.
/// One record per R peak that has a successor (RR = next R - this R).
std::vector<BeatFeatures> extract_features(const EcgSignal& signal, const WaveMarks& marks,
                                           const DetectionConfig& cfg = {});

/// Feature CSV: header "qrs_ms,t_ms,rr_s,pr_ms,st_ms,hr_bpm"; absent fields empty.
void write_features_csv(std::ostream& out, const std::vector<BeatFeatures>& features);
std::vector<BeatFeatures> read_features_csv(std::istream& in);

}  // namespace egw::dsp
