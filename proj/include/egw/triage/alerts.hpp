// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egw/common/canonical.hpp"

namespace egw::triage {

enum class Metric { HeartRate, GatewayTemp, DataTimeout };
enum class Direction { Above, Below };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

/// Fires when the observed value is strictly beyond the threshold.
struct AlertRule {
  Metric metric = Metric::HeartRate;
  double threshold = 0;
  int priority = 1;
  Direction direction = Direction::Above;

  bool violated_by(double observed) const;
};

struct AlertEvent {
  int priority = 1;
  Metric metric = Metric::HeartRate;
  double observed = 0;
  std::int64_t timestamp_ms = 0;
  std::string source;

  Json to_json() const;
  bool operator==(const AlertEvent&) const = default;
};

/// HR > 80 bpm -> 1, HR > 120 bpm -> 3, gateway temperature above
/// `temp_threshold_c` -> 2, no data for longer than `timeout_ms` -> 2.
std::vector<AlertRule> default_rules(double temp_threshold_c = 70.0, double timeout_ms = 30000.0);

/// Rules as JSON: [{"metric":"hr_bpm","threshold":80,"priority":1,"direction":"above"}, ...].
std::vector<AlertRule> rules_from_json(const Json& j);
Json rules_to_json(const std::vector<AlertRule>& rules);

struct Observation {
  std::vector<double> hr_bpm;
  std::optional<double> gateway_temp_c;
  std::optional<double> data_age_ms;
  std::int64_t timestamp_ms = 0;
  std::string source = "egw-0";
};

/// At most one event per metric: the highest-priority violated rule wins, and
/// for a series the value that reaches it first is reported. Events come out
/// in metric order, all stamped with the observation time.
std::vector<AlertEvent> raise_alerts(const Observation& obs, const std::vector<AlertRule>& rules);

std::vector<AlertEvent> raise_alerts(const std::vector<double>& hr_series, std::optional<double> temp_c,
                                     std::optional<double> last_data_age_ms, const std::vector<AlertRule>& rules,
                                     std::int64_t timestamp_ms = 0, const std::string& source = "egw-0");

}  // namespace egw::triage
