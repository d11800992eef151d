// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "egw/dsp/signal.hpp"

namespace egw::arrhythmia {

inline constexpr int kNumClasses = 5;
inline constexpr int kBeatLength = 187;
inline constexpr int kBeatSamplingRate = 125;

/// Label order of the beat files: 0 Normal, 1 Fusion of paced and normal,
/// 2 Premature ventricular contraction, 3 Atrial premature, 4 Fusion of
/// ventricular and normal.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "Normal", "Fusion of paced and normal", "Premature ventricular contraction", "Atrial premature",
    "Fusion of ventricular and normal"};
inline constexpr std::array<std::string_view, kNumClasses> kClassShort{"N", "FPNs", "PVCs", "AP", "FVNs"};

struct BeatRecord {
  std::vector<double> samples;
  int label = 0;
};

using Histogram = std::array<std::size_t, kNumClasses>;

Histogram class_histogram(const std::vector<BeatRecord>& records);

/// Rows of `length` floats followed by an integer label (a float spelling
/// such as "2.0" is accepted when it is integral). No header.
std::vector<BeatRecord> read_beats(std::istream& in, int length = kBeatLength);
std::vector<BeatRecord> load_beats(const std::filesystem::path& path, int length = kBeatLength);
void write_beats(std::ostream& out, const std::vector<BeatRecord>& records);

enum class Sampling { Unbalanced, Oversampled, Undersampled };

std::string_view to_string(Sampling s);
Sampling sampling_from_string(std::string_view s);

struct SamplingStrategy {
  Sampling kind = Sampling::Unbalanced;
  std::uint64_t seed = 0;
};

/// Unbalanced is the identity. Oversampled draws extra copies (with
/// replacement) of each class up to the majority count; undersampled keeps a
/// random subset of each class of the minority size. The class set is
/// 0..max label; an empty input or an empty class inside that range is a
/// data error for the two resampling kinds. Output is grouped by class.
std::vector<BeatRecord> resample(const std::vector<BeatRecord>& records, const SamplingStrategy& strategy);

struct Split {
  std::vector<BeatRecord> first;
  std::vector<BeatRecord> second;
};

/// Per-class split keeping round(fraction * class count) records in `second`,
/// drawn uniformly per seed; within each part the original order is kept.
Split stratified_split(const std::vector<BeatRecord>& records, double fraction, std::uint64_t seed);

/// Beat windows in the layout of the beat files: the signal is resampled to
/// 125 Hz and scaled to [0,1]; each window starts at an R peak, spans 1.2
/// median RR intervals and is zero-padded (or cut) to `length`. Needs at least
/// two R peaks; otherwise no windows.
std::vector<std::vector<double>> beat_windows(const dsp::EcgSignal& signal, const std::vector<Eigen::Index>& r_peaks,
                                              int length = kBeatLength);

/// Synthetic labelled beats with a distinct template per class, for tests and
/// smoke runs. Not a substitute for recorded data.
std::vector<BeatRecord> synthetic_beats(const Histogram& counts, std::uint64_t seed, int length = kBeatLength);

}  // namespace egw::arrhythmia
