// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "egw/arrhythmia/beats.hpp"
#include "egw/common/canonical.hpp"

namespace egw::arrhythmia {

using Confusion = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [true][predicted]

struct ClassScores {
  double accuracy = 0;  // one-vs-rest
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct Metrics {
  Confusion confusion{};
  std::array<ClassScores, kNumClasses> per_class{};
  ClassScores macro{};
  ClassScores weighted{};  // weighted by true-class support
  double overall_accuracy = 0;
  std::size_t total = 0;
};

Confusion confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted);

/// Scores from a confusion matrix. A ratio with a zero denominator is 0.
/// Throws a data error when the matrix is empty.
Metrics metrics_from_confusion(const Confusion& confusion);

Json metrics_to_json(const Metrics& m);

/// Reference figures to print next to a run; soft targets only.
struct ReferenceScores {
  std::string label;
  std::array<std::optional<ClassScores>, kNumClasses> per_class{};
  std::optional<ClassScores> macro;
  std::optional<ClassScores> weighted;
};

/// Reference for a sampling strategy: unbalanced carries the headline average
/// table and the unbalanced column of the per-configuration table.
std::vector<ReferenceScores> reference_scores(Sampling sampling);

/// Plain-text table of a run with reference columns side by side.
std::string metrics_report(const Metrics& m, Sampling sampling);

}  // namespace egw::arrhythmia
