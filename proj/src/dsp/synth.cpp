// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/dsp/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "egw/common/error.hpp"

namespace egw::dsp {

BeatMorphology BeatMorphology::ventricular() {
  BeatMorphology m;
  m.p = {0.0, -160, 20};
  m.q = {-0.2, -50, 15};
  m.r = {1.9, 0, 26};
  m.s = {-0.6, 55, 18};
  m.t = {-0.45, 300, 55};
  return m;
}

std::vector<Eigen::Index> synthetic_r_positions(const std::vector<SynthSegment>& segments, int sampling_rate) {
  std::vector<Eigen::Index> peaks;
  Eigen::Index segment_start = 0;
  Eigen::Index next = 0;
  for (const auto& seg : segments) {
    require(seg.heart_rate_bpm > 0 && seg.duration_s >= 0, ErrorKind::Parameter, "synthesize_ecg: bad segment");
    const auto len = static_cast<Eigen::Index>(std::lround(seg.duration_s * sampling_rate));
    const auto rr = static_cast<Eigen::Index>(std::lround(sampling_rate * 60.0 / seg.heart_rate_bpm));
    const Eigen::Index end = segment_start + len;
    if (next < segment_start) next = segment_start;
    // first beat of the recording sits half a cycle in so its P wave fits
    if (peaks.empty() && next == 0) next = rr / 2;
    while (next < end) {
      peaks.push_back(next);
      next += rr;
    }
    segment_start = end;
  }
  return peaks;
}

EcgSignal synthesize_ecg(const std::vector<SynthSegment>& segments, const SynthOptions& options) {
  require(options.sampling_rate > 0, ErrorKind::Parameter, "synthesize_ecg: sampling rate must be positive");
  const int fs = options.sampling_rate;
  Eigen::Index total = 0;
  for (const auto& seg : segments) total += static_cast<Eigen::Index>(std::lround(seg.duration_s * fs));

  EcgSignal out;
  out.sampling_rate = fs;
  out.samples = Vector<double>::Constant(total, options.baseline_mv);

  const auto peaks = synthetic_r_positions(segments, fs);
  // segment owning each peak, for its morphology
  std::vector<const SynthSegment*> owner;
  {
    Eigen::Index start = 0;
    std::size_t s = 0;
    for (auto p : peaks) {
      while (s < segments.size() && p >= start + static_cast<Eigen::Index>(std::lround(segments[s].duration_s * fs))) {
        start += static_cast<Eigen::Index>(std::lround(segments[s].duration_s * fs));
        ++s;
      }
      owner.push_back(&segments[std::min(s, segments.size() - 1)]);
    }
  }

  for (std::size_t b = 0; b < peaks.size(); ++b) {
    const auto& m = owner[b]->morphology;
    for (const auto* w : {&m.p, &m.q, &m.r, &m.s, &m.t}) {
      if (w->amplitude_mv == 0.0) continue;
      const double centre = static_cast<double>(peaks[b]) + w->offset_ms * fs / 1000.0;
      const double sd = w->width_ms * fs / 1000.0;
      const auto lo = std::max<Eigen::Index>(0, static_cast<Eigen::Index>(std::floor(centre - 6 * sd)));
      const auto hi = std::min<Eigen::Index>(total - 1, static_cast<Eigen::Index>(std::ceil(centre + 6 * sd)));
      for (Eigen::Index i = lo; i <= hi; ++i) {
        const double z = (static_cast<double>(i) - centre) / sd;
        out.samples[i] += w->amplitude_mv * std::exp(-0.5 * z * z);
      }
    }
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index i = 0; i < total; ++i) {
    const double t = static_cast<double>(i) / fs;
    double extra = options.wander_mv * std::sin(2 * std::numbers::pi * 0.3 * t) +
                   options.mains_mv * std::sin(2 * std::numbers::pi * 50.0 * t);
    if (options.noise_mv > 0) extra += options.noise_mv * noise(rng);
    out.samples[i] += extra;
  }
  return out;
}

}  // namespace egw::dsp
