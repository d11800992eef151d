// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <vector>

#include "egw/dsp/signal.hpp"

namespace egw::dsp {

/// One Gaussian wave component of a beat, positioned relative to the R peak.
struct WaveComponent {
  double amplitude_mv = 0;
  double offset_ms = 0;
  double width_ms = 10;  // standard deviation
};

/// Sum-of-Gaussians beat template (P, Q, R, S, T).
struct BeatMorphology {
  WaveComponent p{0.15, -160, 20};
  WaveComponent q{-0.15, -30, 8};
  WaveComponent r{1.6, 0, 10};
  WaveComponent s{-0.3, 30, 8};
  WaveComponent t{0.35, 250, 40};

  static BeatMorphology normal() { return {}; }
  /// Ventricular ectopic shape: no P wave, broad QRS, discordant T.
  static BeatMorphology ventricular();
};

struct SynthSegment {
  double duration_s = 10;
  double heart_rate_bpm = 72;
  BeatMorphology morphology{};
};

struct SynthOptions {
  int sampling_rate = 500;
  double noise_mv = 0.0;       // white Gaussian noise sd
  double baseline_mv = 0.0;    // constant offset
  double wander_mv = 0.0;      // 0.3 Hz baseline wander amplitude
  double mains_mv = 0.0;       // 50 Hz pickup amplitude
  std::uint64_t seed = 1;
};

/// Synthetic recording built from consecutive segments. R peaks fall on
/// integer sample positions spaced round(fs * 60 / HR) samples apart.
EcgSignal synthesize_ecg(const std::vector<SynthSegment>& segments, const SynthOptions& options);

/// R-peak positions synthesize_ecg places for the same segments.
std::vector<Eigen::Index> synthetic_r_positions(const std::vector<SynthSegment>& segments, int sampling_rate);

}  // namespace egw::dsp
