// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/dsp/features.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "egw/common/error.hpp"
#include "egw/dsp/wavelet.hpp"

namespace egw::dsp {
namespace {

constexpr double kQrsSearchMs = 80.0;

Eigen::Index ms_to_samples(double ms, int fs) { return static_cast<Eigen::Index>(std::lround(ms * fs / 1000.0)); }

// Deepest strict local minimum in [begin, end].
std::optional<Eigen::Index> argmin_in(const Vector<double>& x, Eigen::Index begin, Eigen::Index end) {
  begin = std::max<Eigen::Index>(begin, 0);
  end = std::min<Eigen::Index>(end, x.size() - 1);
  if (begin > end) return std::nullopt;
  Eigen::Index best = begin;
  for (Eigen::Index i = begin + 1; i <= end; ++i) {
    if (x[i] < x[best]) best = i;
  }
  // flat stretches carry no Q/S deflection
  const bool strict = (best == 0 || x[best] < x[best - 1]) && (best == x.size() - 1 || x[best] < x[best + 1]);
  if (!strict) return std::nullopt;
  return best;
}

std::optional<Eigen::Index> mark_in(const std::vector<Eigen::Index>& marks, Eigen::Index begin, Eigen::Index end) {
  for (auto m : marks) {
    if (m >= begin && m <= end) return m;
  }
  return std::nullopt;
}

std::string format_optional(const std::optional<double>& v) {
  if (!v) return {};
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<BeatFeatures> extract_features(const EcgSignal& signal, const WaveMarks& marks,
                                           const DetectionConfig& cfg) {
  std::vector<BeatFeatures> out;
  const auto& x = signal.samples;
  const int fs = signal.sampling_rate;
  require(fs > 0, ErrorKind::Parameter, "extract_features: sampling rate must be positive");
  if (marks.r_peaks.size() < 2 || x.size() == 0) return out;

  const auto to_ms = [fs](Eigen::Index samples) { return 1000.0 * static_cast<double>(samples) / fs; };
  const Eigen::Index qrs_span = ms_to_samples(kQrsSearchMs, fs);
  const double baseline = isoelectric_level(signal);

  for (std::size_t i = 0; i + 1 < marks.r_peaks.size(); ++i) {
    const Eigen::Index r = marks.r_peaks[i];
    require(r >= 0 && r < x.size(), ErrorKind::Parameter, "extract_features: R mark out of bounds");
    BeatFeatures f;
    const double rr = static_cast<double>(marks.r_peaks[i + 1] - r) / fs;
    f.rr_interval_s = rr;
    if (rr > 0) f.heart_rate_bpm = 60.0 / rr;

    const auto q = r > 0 ? argmin_in(x, r - qrs_span, r - 1) : std::nullopt;
    const auto s = r + 1 < x.size() ? argmin_in(x, r + 1, r + qrs_span) : std::nullopt;
    if (q && s) f.qrs_duration_ms = to_ms(*s - *q);

    const auto p = mark_in(marks.p_peaks, r + ms_to_samples(cfg.p_window_begin_ms, fs),
                           r + ms_to_samples(cfg.p_window_end_ms, fs));
    if (p && q && *q >= *p) f.pr_interval_ms = to_ms(*q - *p);

    const auto t = mark_in(marks.t_peaks, r + ms_to_samples(cfg.t_window_begin_ms, fs),
                           r + ms_to_samples(cfg.t_window_end_ms, fs));
    if (t) {
      const double half = baseline + 0.5 * (x[*t] - baseline);
      Eigen::Index onset = *t;
      while (onset > 0 && x[onset] > half) --onset;
      Eigen::Index offset = *t;
      while (offset < x.size() - 1 && x[offset] > half) ++offset;
      const bool bounded = x[onset] <= half && x[offset] <= half;
      if (bounded) {
        f.t_wave_duration_ms = to_ms(offset - onset);
        if (s && onset >= *s) f.st_segment_ms = to_ms(onset - *s);
      }
    }
    out.push_back(f);
  }
  return out;
}

void write_features_csv(std::ostream& out, const std::vector<BeatFeatures>& features) {
  out << "qrs_ms,t_ms,rr_s,pr_ms,st_ms,hr_bpm\n";
  for (const auto& f : features) {
    const auto values = f.as_array();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out << ',';
      out << format_optional(values[i]);
    }
    out << '\n';
  }
}

std::vector<BeatFeatures> read_features_csv(std::istream& in) {
  std::vector<BeatFeatures> out;
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, "feature CSV: missing header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::array<std::optional<double>, BeatFeatures::kCount> values;
    std::size_t field = 0, start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      auto token = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      require(field < values.size(), ErrorKind::Format, "feature CSV row " + std::to_string(row) + ": too many fields");
      if (!token.empty()) {
        double v = 0;
        auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        require(res.ec == std::errc{} && res.ptr == token.data() + token.size(), ErrorKind::Format,
                "feature CSV row " + std::to_string(row) + ": bad number '" + token + "'");
        values[field] = v;
      }
      ++field;
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    require(field == values.size(), ErrorKind::Format, "feature CSV row " + std::to_string(row) + ": expected 6 fields");
    out.push_back({values[0], values[1], values[2], values[3], values[4], values[5]});
  }
  return out;
}

double coeff_payload_reduction(Eigen::Index signal_len, int num_levels) {
  require(num_levels >= 1, ErrorKind::Parameter, "coeff_payload_reduction: num_levels must be >= 1");
  require(signal_len >= 1, ErrorKind::Parameter, "coeff_payload_reduction: signal_len must be >= 1");
  Eigen::Index retained = signal_len;
  for (int i = 0; i < num_levels; ++i) retained = half_length(retained);
  return 1.0 - static_cast<double>(retained) / static_cast<double>(signal_len);
}

}  // namespace egw::dsp
