// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/triage/alerts.hpp"

#include <cmath>

#include "egw/common/error.hpp"

namespace egw::triage {

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::HeartRate: return "hr_bpm";
    case Metric::GatewayTemp: return "gateway_temp";
    case Metric::DataTimeout: return "data_timeout";
  }
  return "hr_bpm";
}

Metric metric_from_string(std::string_view s) {
  if (s == "hr_bpm") return Metric::HeartRate;
  if (s == "gateway_temp") return Metric::GatewayTemp;
  if (s == "data_timeout") return Metric::DataTimeout;
  fail(ErrorKind::Config, "unknown alert metric '" + std::string(s) + "'");
}

bool AlertRule::violated_by(double observed) const {
  return direction == Direction::Above ? observed > threshold : observed < threshold;
}

Json AlertEvent::to_json() const {
  return Json{{"metric", to_string(metric)}, {"observed", observed}, {"priority", priority},
              {"source", source}, {"timestamp_ms", timestamp_ms}, {"type", "alert"}};
}

std::vector<AlertRule> default_rules(double temp_threshold_c, double timeout_ms) {
  return {{Metric::HeartRate, 80.0, 1, Direction::Above},
          {Metric::HeartRate, 120.0, 3, Direction::Above},
          {Metric::GatewayTemp, temp_threshold_c, 2, Direction::Above},
          {Metric::DataTimeout, timeout_ms, 2, Direction::Above}};
}

std::vector<AlertRule> rules_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::Config, "alert rules: expected an array");
  std::vector<AlertRule> out;
  for (const auto& r : j) {
    AlertRule rule;
    rule.metric = metric_from_string(r.at("metric").get<std::string>());
    rule.threshold = r.at("threshold").get<double>();
    rule.priority = r.at("priority").get<int>();
    const auto dir = r.value("direction", std::string("above"));
    require(dir == "above" || dir == "below", ErrorKind::Config, "alert rules: direction must be above or below");
    rule.direction = dir == "above" ? Direction::Above : Direction::Below;
    require(rule.priority >= 1, ErrorKind::Config, "alert rules: priority must be >= 1");
    require(std::isfinite(rule.threshold), ErrorKind::Config, "alert rules: threshold must be finite");
    out.push_back(rule);
  }
  return out;
}

Json rules_to_json(const std::vector<AlertRule>& rules) {
  Json out = Json::array();
  for (const auto& r : rules)
    out.push_back(Json{{"direction", r.direction == Direction::Above ? "above" : "below"},
                       {"metric", to_string(r.metric)},
                       {"priority", r.priority},
                       {"threshold", r.threshold}});
  return out;
}

std::vector<AlertEvent> raise_alerts(const Observation& obs, const std::vector<AlertRule>& rules) {
  for (const auto& r : rules) require(r.priority >= 1, ErrorKind::Parameter, "raise_alerts: priority must be >= 1");

  std::vector<AlertEvent> out;
  for (Metric metric : {Metric::HeartRate, Metric::GatewayTemp, Metric::DataTimeout}) {
    std::vector<double> values;
    if (metric == Metric::HeartRate) values = obs.hr_bpm;
    if (metric == Metric::GatewayTemp && obs.gateway_temp_c) values.push_back(*obs.gateway_temp_c);
    if (metric == Metric::DataTimeout && obs.data_age_ms) values.push_back(*obs.data_age_ms);

    std::optional<AlertEvent> best;
    for (const auto& rule : rules) {
      if (rule.metric != metric || (best && best->priority >= rule.priority)) continue;
      for (double v : values) {
        if (std::isfinite(v) && rule.violated_by(v)) {
          best = AlertEvent{rule.priority, metric, v, obs.timestamp_ms, obs.source};
          break;
        }
      }
    }
    if (best) out.push_back(*best);
  }
  return out;
}

std::vector<AlertEvent> raise_alerts(const std::vector<double>& hr_series, std::optional<double> temp_c,
                                     std::optional<double> last_data_age_ms, const std::vector<AlertRule>& rules,
                                     std::int64_t timestamp_ms, const std::string& source) {
  return raise_alerts(Observation{hr_series, temp_c, last_data_age_ms, timestamp_ms, source}, rules);
}

}  // namespace egw::triage
