// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "egw/common/canonical.hpp"
#include "egw/dsp/extract.hpp"
#include "egw/market/market.hpp"
#include "egw/triage/alerts.hpp"

namespace egw::gateway {

struct BatchPolicy {
  double period_s = 60;
  double min_period_s = 10;
  double max_period_s = 300;
  int max_pending_records = 64;  // beyond this, chunks pass through as raw data
};

/// Feedback-driven reconfiguration. Evaluated once per window of chunks.
struct ManagementPolicy {
  int window_chunks = 6;
  int sustained_p3_chunks = 3;  // consecutive priority-3 alerts that halve the period
  int false_alarm_limit = 2;    // labelled false alarms that raise the priority-1 HR threshold
  double hr1_step_bpm = 5;
  double hr1_max_bpm = 100;
};

/// Known diagnosis for part of a recording, used only for the feedback log.
struct LabelSpan {
  double start_s = 0;
  double end_s = 0;
  bool abnormal = false;
};

struct CnnBootstrap {
  int windows_per_class = 120;
  int epochs = 3;
  std::uint64_t seed = 5;
};

struct GatewayConfig {
  std::string gateway_id = "egw-0";
  std::uint64_t seed = 1;
  int sampling_rate = 500;
  double chunk_s = 10;
  std::int64_t start_ms = 0;
  double abnormal_fraction = 0.3;  // share of screened beats that makes a chunk abnormal
  int dwt_levels = 2;
  std::vector<triage::AlertRule> rules = triage::default_rules();
  BatchPolicy batch{};
  ManagementPolicy management{};
  std::string suite = "classical";
  market::Units min_deposit = 10;
  std::string triage_model;  // screen JSON; empty means bootstrap
  std::string triage_classifier = "nb";
  std::uint64_t triage_seed = 11;
  std::string cnn_model;  // model file; empty means bootstrap
  CnnBootstrap cnn_bootstrap{};
  bool threaded = false;
  std::vector<int> fail_appends;  // 1-based ledger append attempts that fail
  std::vector<LabelSpan> labels;

  Json to_json() const;
  /// Missing keys keep defaults; unknown keys or bad values are a Config error.
  /// Relative model paths are resolved against `base_dir`.
  static GatewayConfig from_json(const Json& j, const std::filesystem::path& base_dir = {});
  static GatewayConfig load(const std::filesystem::path& path);
  void validate() const;
};

struct FeedbackEntry {
  std::size_t chunk = 0;
  std::string verdict;
  int alert_priority = 0;  // 0 when no alert
  std::optional<int> cnn_class;
  std::optional<bool> truth_abnormal;
  std::int64_t timestamp_ms = 0;

  Json to_json() const;
};

/// Shared knowledge: the live config with its version history, and the
/// feedback log. Every config change bumps the version by one.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(GatewayConfig config);

  const GatewayConfig& config() const { return config_; }
  int version() const { return version_; }
  const std::vector<Json>& history() const { return history_; }
  const std::vector<FeedbackEntry>& feedback() const { return feedback_; }

  void record(FeedbackEntry entry) { feedback_.push_back(std::move(entry)); }
  /// Applies `delta` (as produced by the management rules) and returns the new version.
  int apply(const Json& delta, std::int64_t timestamp_ms);
  double initial_period_s() const { return initial_period_s_; }
  Json to_json() const;

 private:
  GatewayConfig config_;
  double initial_period_s_;
  int version_ = 1;
  std::vector<Json> history_;
  std::vector<FeedbackEntry> feedback_;
};

/// Management rules over one feedback window; empty object when nothing changes.
///  - a run of >= sustained_p3_chunks priority-3 alerts halves the batch period (floor min_period_s);
///  - a window without alerts doubles a shortened period back (cap: the initial period);
///  - >= false_alarm_limit alerts on chunks labelled normal raise the priority-1
///    heart-rate threshold by hr1_step_bpm (cap hr1_max_bpm).
/// Class labels, crypto parameters and everything else are never touched.
Json management_delta(const GatewayConfig& config, double initial_period_s, const std::vector<FeedbackEntry>& window);

}  // namespace egw::gateway
