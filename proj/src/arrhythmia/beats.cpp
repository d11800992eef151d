// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/arrhythmia/beats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "egw/common/error.hpp"
#include "egw/common/random.hpp"

namespace egw::arrhythmia {
namespace {

double parse_field(std::string_view field, std::size_t row) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  require(ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(v), ErrorKind::Format,
          "beats: row " + std::to_string(row) + ": bad number '" + std::string(field) + "'");
  return v;
}

std::vector<std::vector<std::size_t>> indices_by_class(const std::vector<BeatRecord>& records) {
  std::vector<std::vector<std::size_t>> by(kNumClasses);
  for (std::size_t i = 0; i < records.size(); ++i) by[static_cast<std::size_t>(records[i].label)].push_back(i);
  return by;
}

}  // namespace

Histogram class_histogram(const std::vector<BeatRecord>& records) {
  Histogram h{};
  for (const auto& r : records) {
    require(r.label >= 0 && r.label < kNumClasses, ErrorKind::Data, "beats: label out of range");
    ++h[static_cast<std::size_t>(r.label)];
  }
  return h;
}

std::vector<BeatRecord> read_beats(std::istream& in, int length) {
  require(length >= 1, ErrorKind::Parameter, "beats: length must be >= 1");
  std::vector<BeatRecord> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    BeatRecord rec;
    rec.samples.reserve(static_cast<std::size_t>(length));
    std::string_view rest(line);
    std::vector<double> fields;
    fields.reserve(static_cast<std::size_t>(length) + 1);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(parse_field(rest.substr(0, comma), row));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    require(fields.size() == static_cast<std::size_t>(length) + 1, ErrorKind::Format,
            "beats: row " + std::to_string(row) + ": expected " + std::to_string(length + 1) + " columns, got " +
                std::to_string(fields.size()));
    const double label = fields.back();
    require(label == std::floor(label) && label >= 0 && label < kNumClasses, ErrorKind::Format,
            "beats: row " + std::to_string(row) + ": label out of range");
    rec.label = static_cast<int>(label);
    fields.pop_back();
    rec.samples = std::move(fields);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<BeatRecord> load_beats(const std::filesystem::path& path, int length) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "beats: cannot open " + path.string());
  return read_beats(in, length);
}

void write_beats(std::ostream& out, const std::vector<BeatRecord>& records) {
  out << std::setprecision(17);
  for (const auto& r : records) {
    for (double v : r.samples) out << v << ',';
    out << r.label << '\n';
  }
}

std::string_view to_string(Sampling s) {
  switch (s) {
    case Sampling::Unbalanced: return "unbalanced";
    case Sampling::Oversampled: return "oversampled";
    case Sampling::Undersampled: return "undersampled";
  }
  return "unbalanced";
}

Sampling sampling_from_string(std::string_view s) {
  if (s == "unbalanced") return Sampling::Unbalanced;
  if (s == "oversampled" || s == "oversample") return Sampling::Oversampled;
  if (s == "undersampled" || s == "undersample") return Sampling::Undersampled;
  fail(ErrorKind::Parameter, "unknown sampling strategy '" + std::string(s) + "'");
}

std::vector<BeatRecord> resample(const std::vector<BeatRecord>& records, const SamplingStrategy& strategy) {
  if (strategy.kind == Sampling::Unbalanced) return records;
  require(!records.empty(), ErrorKind::Data, "resample: empty input");
  const Histogram h = class_histogram(records);
  int top = 0;
  for (int c = 0; c < kNumClasses; ++c)
    if (h[static_cast<std::size_t>(c)] > 0) top = c;
  std::size_t most = 0, least = records.size();
  for (int c = 0; c <= top; ++c) {
    require(h[static_cast<std::size_t>(c)] > 0, ErrorKind::Data,
            "resample: class " + std::to_string(c) + " has no records");
    most = std::max(most, h[static_cast<std::size_t>(c)]);
    least = std::min(least, h[static_cast<std::size_t>(c)]);
  }

  Drbg rng(strategy.seed);
  const auto by = indices_by_class(records);
  std::vector<BeatRecord> out;
  for (int c = 0; c <= top; ++c) {
    const auto& idx = by[static_cast<std::size_t>(c)];
    if (strategy.kind == Sampling::Oversampled) {
      for (auto i : idx) out.push_back(records[i]);
      for (std::size_t k = idx.size(); k < most; ++k) out.push_back(records[idx[rng.uniform(idx.size())]]);
    } else {
      std::vector<std::size_t> pick = idx;
      for (std::size_t k = 0; k < least; ++k) std::swap(pick[k], pick[k + rng.uniform(pick.size() - k)]);
      pick.resize(least);
      std::sort(pick.begin(), pick.end());
      for (auto i : pick) out.push_back(records[i]);
    }
  }
  return out;
}

Split stratified_split(const std::vector<BeatRecord>& records, double fraction, std::uint64_t seed) {
  require(fraction >= 0 && fraction <= 1, ErrorKind::Parameter, "split: fraction must be in [0,1]");
  Drbg rng(seed);
  std::vector<char> in_second(records.size(), 0);
  for (auto idx : indices_by_class(records)) {
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(idx[j], idx[j + rng.uniform(idx.size() - j)]);
      in_second[idx[j]] = 1;
    }
  }
  Split s;
  for (std::size_t i = 0; i < records.size(); ++i) (in_second[i] ? s.second : s.first).push_back(records[i]);
  return s;
}

std::vector<std::vector<double>> beat_windows(const dsp::EcgSignal& signal, const std::vector<Eigen::Index>& r_peaks,
                                              int length) {
  require(length >= 1, ErrorKind::Parameter, "beat_windows: length must be >= 1");
  require(signal.sampling_rate > 0, ErrorKind::Parameter, "beat_windows: sampling rate must be positive");
  std::vector<std::vector<double>> out;
  if (r_peaks.size() < 2 || signal.size() < 2) return out;

  const double ratio = static_cast<double>(kBeatSamplingRate) / signal.sampling_rate;
  const auto n_out = static_cast<Eigen::Index>(std::floor((signal.size() - 1) * ratio)) + 1;
  std::vector<double> x(static_cast<std::size_t>(n_out));
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double t = static_cast<double>(i) / ratio;
    const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(t), signal.size() - 2);
    const double frac = t - static_cast<double>(k);
    x[static_cast<std::size_t>(i)] = (1 - frac) * signal.samples[k] + frac * signal.samples[k + 1];
  }
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it, span = *hi_it - *lo_it;
  for (auto& v : x) v = span > 0 ? (v - lo) / span : 0.0;

  std::vector<double> rr;
  for (std::size_t i = 0; i + 1 < r_peaks.size(); ++i) rr.push_back(static_cast<double>(r_peaks[i + 1] - r_peaks[i]));
  std::nth_element(rr.begin(), rr.begin() + static_cast<std::ptrdiff_t>(rr.size() / 2), rr.end());
  const double median_rr = rr[rr.size() / 2] * ratio;
  const auto span_len = std::min<std::size_t>(static_cast<std::size_t>(std::llround(1.2 * median_rr)),
                                              static_cast<std::size_t>(length));

  for (auto r : r_peaks) {
    const auto start = static_cast<std::size_t>(std::llround(static_cast<double>(r) * ratio));
    if (start >= x.size()) continue;
    std::vector<double> w(static_cast<std::size_t>(length), 0.0);
    const std::size_t take = std::min(span_len, x.size() - start);
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(start), take, w.begin());
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

struct Bump {
  double amplitude, center_ms, width_ms;
};

std::vector<Bump> class_template(int label, double rr_ms) {
  switch (label) {
    case 0:  // narrow QRS, upright T, P before the next R
      return {{1.0, 0, 12}, {-0.2, 35, 10}, {0.3, 260, 45}, {0.12, rr_ms - 160, 22}, {1.0, rr_ms, 12}};
    case 1:  // premature beat: short cycle, early P, mixed QRS
      return {{0.8, 0, 16}, {-0.15, 45, 12}, {0.25, 220, 40}, {0.2, rr_ms - 120, 18}, {0.8, rr_ms, 16}};
    case 2:  // broad QRS, discordant T, no P
      return {{1.0, 0, 35}, {-0.6, 90, 35}, {-0.45, 330, 60}, {1.0, rr_ms, 35}};
    case 3:  // atrial premature: very short cycle, abnormal P, narrow QRS
      return {{1.0, 0, 11}, {-0.25, 30, 9}, {0.3, 230, 40}, {-0.18, rr_ms - 110, 18}, {1.0, rr_ms, 11}};
    default:  // fusion: intermediate QRS width, low T
      return {{0.9, 0, 22}, {-0.35, 60, 20}, {0.12, 290, 50}, {0.08, rr_ms - 150, 22}, {0.9, rr_ms, 22}};
  }
}

}  // namespace

std::vector<BeatRecord> synthetic_beats(const Histogram& counts, std::uint64_t seed, int length) {
  require(length >= 1, ErrorKind::Parameter, "synthetic_beats: length must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  constexpr std::array<double, kNumClasses> kRrMs{800, 560, 900, 480, 760};
  std::vector<BeatRecord> out;
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t k = 0; k < counts[static_cast<std::size_t>(c)]; ++k) {
      const double rr = kRrMs[static_cast<std::size_t>(c)] * (1 + 0.06 * unit(rng));
      const double stretch = 1 + 0.08 * unit(rng);
      auto bumps = class_template(c, rr);
      for (auto& b : bumps) {
        b.amplitude *= 1 + 0.12 * unit(rng);
        b.width_ms *= stretch;
      }
      const auto span = std::min<int>(length, static_cast<int>(1.2 * rr * kBeatSamplingRate / 1000.0));
      std::vector<double> s(static_cast<std::size_t>(length), 0.0);
      for (int i = 0; i < span; ++i) {
        const double t = 1000.0 * i / kBeatSamplingRate;
        double v = 0.03 * unit(rng);
        for (const auto& b : bumps) v += b.amplitude * std::exp(-0.5 * std::pow((t - b.center_ms) / b.width_ms, 2));
        s[static_cast<std::size_t>(i)] = v;
      }
      const auto [lo, hi] = std::minmax_element(s.begin(), s.begin() + span);
      const double lo_v = *lo, range = *hi - *lo;
      for (int i = 0; i < span; ++i) s[static_cast<std::size_t>(i)] = (s[static_cast<std::size_t>(i)] - lo_v) / range;
      out.push_back({std::move(s), c});
    }
  }
  return out;
}

}  // namespace egw::arrhythmia
