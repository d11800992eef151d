// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/dsp/waves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "egw/common/error.hpp"

namespace egw::dsp {
namespace {

bool is_local_max(const Vector<double>& x, Eigen::Index i) {
  const Eigen::Index n = x.size();
  const bool left_ok = i == 0 || x[i] >= x[i - 1];
  const bool right_ok = i == n - 1 || x[i] > x[i + 1];
  return left_ok && right_ok;
}

Eigen::Index ms_to_samples(double ms, int fs) { return static_cast<Eigen::Index>(std::lround(ms * fs / 1000.0)); }

// Tallest local maximum above threshold in [begin, end]; -1 when none.
Eigen::Index best_peak(const Vector<double>& x, Eigen::Index begin, Eigen::Index end, double threshold) {
  begin = std::max<Eigen::Index>(begin, 0);
  end = std::min<Eigen::Index>(end, x.size() - 1);
  Eigen::Index best = -1;
  for (Eigen::Index i = begin; i <= end; ++i) {
    if (x[i] > threshold && is_local_max(x, i) && (best < 0 || x[i] > x[best])) best = i;
  }
  return best;
}

}  // namespace

WaveMarks detect_waves(const EcgSignal& signal, const DetectionConfig& cfg) {
  require(cfg.r_threshold_mv > 0 && cfg.p_threshold_mv > 0 && cfg.t_threshold_mv > 0, ErrorKind::Parameter,
          "detect_waves: thresholds must be positive");
  require(cfg.refractory_ms >= 0, ErrorKind::Parameter, "detect_waves: refractory must be >= 0");
  require(signal.sampling_rate > 0, ErrorKind::Parameter, "detect_waves: sampling rate must be positive");

  WaveMarks marks;
  if (signal.size() == 0) return marks;
  const Vector<double> x = signal.samples.array() - isoelectric_level(signal);
  const int fs = signal.sampling_rate;

  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > cfg.r_threshold_mv && is_local_max(x, i)) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return x[a] > x[b]; });

  const double refractory_s = cfg.refractory_ms / 1000.0;
  for (auto c : candidates) {
    const bool clear = std::none_of(marks.r_peaks.begin(), marks.r_peaks.end(), [&](Eigen::Index r) {
      return static_cast<double>(std::abs(r - c)) / fs < refractory_s;
    });
    if (clear) marks.r_peaks.push_back(c);
  }
  std::sort(marks.r_peaks.begin(), marks.r_peaks.end());

  for (auto r : marks.r_peaks) {
    auto p = best_peak(x, r + ms_to_samples(cfg.p_window_begin_ms, fs), r + ms_to_samples(cfg.p_window_end_ms, fs),
                       cfg.p_threshold_mv);
    if (p >= 0 && (marks.p_peaks.empty() || p > marks.p_peaks.back())) marks.p_peaks.push_back(p);
    auto t = best_peak(x, r + ms_to_samples(cfg.t_window_begin_ms, fs), r + ms_to_samples(cfg.t_window_end_ms, fs),
                       cfg.t_threshold_mv);
    if (t >= 0 && (marks.t_peaks.empty() || t > marks.t_peaks.back())) marks.t_peaks.push_back(t);
  }
  return marks;
}

WaveMarks detect_waves(const EcgSignal& signal, double r_threshold_mv, double p_threshold_mv, double t_threshold_mv,
                       double refractory_ms) {
  DetectionConfig cfg;
  cfg.r_threshold_mv = r_threshold_mv;
  cfg.p_threshold_mv = p_threshold_mv;
  cfg.t_threshold_mv = t_threshold_mv;
  cfg.refractory_ms = refractory_ms;
  return detect_waves(signal, cfg);
}

double isoelectric_level(const EcgSignal& signal) {
  if (signal.size() == 0) return 0.0;
  std::vector<double> v(signal.samples.data(), signal.samples.data() + signal.size());
  auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::vector<double> heart_rate(const std::vector<Eigen::Index>& r_peaks, int sampling_rate) {
  require(sampling_rate > 0, ErrorKind::Parameter, "heart_rate: sampling rate must be positive");
  std::vector<double> out;
  if (r_peaks.size() < 2) return out;
  out.reserve(r_peaks.size() - 1);
  for (std::size_t i = 0; i + 1 < r_peaks.size(); ++i) {
    require(r_peaks[i + 1] > r_peaks[i], ErrorKind::Parameter, "heart_rate: peaks must be strictly increasing");
    const double rr = static_cast<double>(r_peaks[i + 1] - r_peaks[i]) / sampling_rate;
    out.push_back(60.0 / rr);
  }
  return out;
}

}  // namespace egw::dsp
