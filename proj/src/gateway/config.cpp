// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/gateway/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "egw/common/error.hpp"

namespace egw::gateway {

namespace {

void only_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Config, where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    require(ok.contains(k), ErrorKind::Config, where + ": unknown key '" + k + "'");
}

template <typename T>
void take(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).string();
}

}  // namespace

Json GatewayConfig::to_json() const {
  Json labels_j = Json::array();
  for (const auto& l : labels) labels_j.push_back({{"abnormal", l.abnormal}, {"end_s", l.end_s}, {"start_s", l.start_s}});
  return Json{{"abnormal_fraction", abnormal_fraction},
              {"batch",
               {{"max_pending_records", batch.max_pending_records},
                {"max_period_s", batch.max_period_s},
                {"min_period_s", batch.min_period_s},
                {"period_s", batch.period_s}}},
              {"chunk_s", chunk_s},
              {"cnn",
               {{"model", cnn_model},
                {"bootstrap",
                 {{"epochs", cnn_bootstrap.epochs},
                  {"seed", cnn_bootstrap.seed},
                  {"windows_per_class", cnn_bootstrap.windows_per_class}}}}},
              {"dwt_levels", dwt_levels},
              {"fail_appends", fail_appends},
              {"gateway_id", gateway_id},
              {"labels", labels_j},
              {"management",
               {{"false_alarm_limit", management.false_alarm_limit},
                {"hr1_max_bpm", management.hr1_max_bpm},
                {"hr1_step_bpm", management.hr1_step_bpm},
                {"sustained_p3_chunks", management.sustained_p3_chunks},
                {"window_chunks", management.window_chunks}}},
              {"market", {{"min_deposit", min_deposit}, {"suite", suite}}},
              {"rules", triage::rules_to_json(rules)},
              {"sampling_rate", sampling_rate},
              {"seed", seed},
              {"start_ms", start_ms},
              {"threaded", threaded},
              {"triage", {{"classifier", triage_classifier}, {"model", triage_model}, {"seed", triage_seed}}}};
}

GatewayConfig GatewayConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
  GatewayConfig c;
  try {
    only_keys(j,
              {"abnormal_fraction", "batch", "chunk_s", "cnn", "dwt_levels", "fail_appends", "gateway_id", "labels",
               "management", "market", "rules", "sampling_rate", "seed", "start_ms", "threaded", "triage"},
              "gateway config");
    take(j, "gateway_id", c.gateway_id);
    take(j, "seed", c.seed);
    take(j, "sampling_rate", c.sampling_rate);
    take(j, "chunk_s", c.chunk_s);
    take(j, "start_ms", c.start_ms);
    take(j, "abnormal_fraction", c.abnormal_fraction);
    take(j, "dwt_levels", c.dwt_levels);
    take(j, "threaded", c.threaded);
    take(j, "fail_appends", c.fail_appends);
    if (j.contains("rules")) c.rules = triage::rules_from_json(j["rules"]);
    if (j.contains("batch")) {
      const auto& b = j["batch"];
      only_keys(b, {"period_s", "min_period_s", "max_period_s", "max_pending_records"}, "batch");
      take(b, "period_s", c.batch.period_s);
      take(b, "min_period_s", c.batch.min_period_s);
      take(b, "max_period_s", c.batch.max_period_s);
      take(b, "max_pending_records", c.batch.max_pending_records);
    }
    if (j.contains("management")) {
      const auto& m = j["management"];
      only_keys(m, {"window_chunks", "sustained_p3_chunks", "false_alarm_limit", "hr1_step_bpm", "hr1_max_bpm"},
                "management");
      take(m, "window_chunks", c.management.window_chunks);
      take(m, "sustained_p3_chunks", c.management.sustained_p3_chunks);
      take(m, "false_alarm_limit", c.management.false_alarm_limit);
      take(m, "hr1_step_bpm", c.management.hr1_step_bpm);
      take(m, "hr1_max_bpm", c.management.hr1_max_bpm);
    }
    if (j.contains("market")) {
      const auto& m = j["market"];
      only_keys(m, {"suite", "min_deposit"}, "market");
      take(m, "suite", c.suite);
      take(m, "min_deposit", c.min_deposit);
    }
    if (j.contains("triage")) {
      const auto& t = j["triage"];
      only_keys(t, {"model", "classifier", "seed"}, "triage");
      take(t, "model", c.triage_model);
      take(t, "classifier", c.triage_classifier);
      take(t, "seed", c.triage_seed);
    }
    if (j.contains("cnn")) {
      const auto& n = j["cnn"];
      only_keys(n, {"model", "bootstrap"}, "cnn");
      take(n, "model", c.cnn_model);
      if (n.contains("bootstrap")) {
        const auto& b = n["bootstrap"];
        only_keys(b, {"windows_per_class", "epochs", "seed"}, "cnn.bootstrap");
        take(b, "windows_per_class", c.cnn_bootstrap.windows_per_class);
        take(b, "epochs", c.cnn_bootstrap.epochs);
        take(b, "seed", c.cnn_bootstrap.seed);
      }
    }
    if (j.contains("labels")) {
      for (const auto& l : j["labels"]) {
        only_keys(l, {"start_s", "end_s", "abnormal"}, "labels");
        c.labels.push_back({l.at("start_s").get<double>(), l.at("end_s").get<double>(), l.at("abnormal").get<bool>()});
      }
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, std::string("gateway config: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, std::string("gateway config: ") + e.what());
  }
  c.triage_model = resolve(c.triage_model, base_dir);
  c.cnn_model = resolve(c.cnn_model, base_dir);
  c.validate();
  return c;
}

GatewayConfig GatewayConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, "config '" + path.string() + "': " + e.what());
  }
  return from_json(j, path.parent_path());
}

void GatewayConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::Config, "gateway config: " + what); };
  check(!gateway_id.empty(), "gateway_id is empty");
  check(sampling_rate > 0, "sampling_rate must be positive");
  check(chunk_s > 0 && chunk_s * sampling_rate >= 1, "chunk_s must cover at least one sample");
  check(abnormal_fraction > 0 && abnormal_fraction <= 1, "abnormal_fraction must be in (0, 1]");
  check(dwt_levels >= 1 && dwt_levels <= 8, "dwt_levels must be in 1..8");
  check(batch.min_period_s > 0 && batch.min_period_s <= batch.period_s && batch.period_s <= batch.max_period_s,
        "batch periods must satisfy 0 < min <= period <= max");
  check(batch.max_pending_records >= 1, "max_pending_records must be >= 1");
  check(management.window_chunks >= 1 && management.sustained_p3_chunks >= 1 && management.false_alarm_limit >= 1,
        "management counts must be >= 1");
  check(management.hr1_step_bpm >= 0, "hr1_step_bpm must be >= 0");
  check(suite == "pq" || suite == "classical", "market.suite must be \"pq\" or \"classical\"");
  check(min_deposit >= 0, "market.min_deposit must be >= 0");
  check(triage_classifier == "nb" || triage_classifier == "svm", "triage.classifier must be \"nb\" or \"svm\"");
  check(cnn_bootstrap.windows_per_class >= 1 && cnn_bootstrap.epochs >= 1, "cnn.bootstrap counts must be >= 1");
  for (int a : fail_appends) check(a >= 1, "fail_appends entries are 1-based attempt numbers");
  for (const auto& l : labels) check(l.end_s > l.start_s, "label spans need end_s > start_s");
}

Json FeedbackEntry::to_json() const {
  return Json{{"alert_priority", alert_priority},
              {"chunk", chunk},
              {"cnn_class", cnn_class ? Json(*cnn_class) : Json(nullptr)},
              {"timestamp_ms", timestamp_ms},
              {"truth_abnormal", truth_abnormal ? Json(*truth_abnormal) : Json(nullptr)},
              {"verdict", verdict}};
}

KnowledgeBase::KnowledgeBase(GatewayConfig config)
    : config_(std::move(config)), initial_period_s_(config_.batch.period_s) {
  config_.validate();
}

int KnowledgeBase::apply(const Json& delta, std::int64_t timestamp_ms) {
  if (delta.empty()) return version_;
  GatewayConfig next = config_;
  if (delta.contains("batch_period_s")) next.batch.period_s = delta["batch_period_s"].at("to").get<double>();
  if (delta.contains("hr1_threshold_bpm")) {
    const double to = delta["hr1_threshold_bpm"].at("to").get<double>();
    for (auto& r : next.rules)
      if (r.metric == triage::Metric::HeartRate && r.priority == 1 && r.direction == triage::Direction::Above)
        r.threshold = to;
  }
  next.validate();
  config_ = std::move(next);
  ++version_;
  history_.push_back({{"delta", delta}, {"timestamp_ms", timestamp_ms}, {"version", version_}});
  return version_;
}

Json KnowledgeBase::to_json() const {
  Json fb = Json::array();
  for (const auto& f : feedback_) fb.push_back(f.to_json());
  return Json{{"config", config_.to_json()}, {"feedback", fb}, {"history", history_}, {"version", version_}};
}

Json management_delta(const GatewayConfig& config, double initial_period_s, const std::vector<FeedbackEntry>& window) {
  Json delta = Json::object();
  if (window.empty()) return delta;

  int run = 0, longest = 0, alerts = 0, false_alarms = 0;
  for (const auto& f : window) {
    run = f.alert_priority == 3 ? run + 1 : 0;
    longest = std::max(longest, run);
    alerts += f.alert_priority > 0;
    false_alarms += f.alert_priority > 0 && f.truth_abnormal.has_value() && !*f.truth_abnormal;
  }

  const double period = config.batch.period_s;
  double next = period;
  if (longest >= config.management.sustained_p3_chunks)
    next = std::max(config.batch.min_period_s, period / 2);
  else if (alerts == 0 && period < initial_period_s)
    next = std::min(initial_period_s, period * 2);
  if (next != period) delta["batch_period_s"] = {{"from", period}, {"to", next}};

  if (false_alarms >= config.management.false_alarm_limit) {
    for (const auto& r : config.rules) {
      if (r.metric != triage::Metric::HeartRate || r.priority != 1 || r.direction != triage::Direction::Above)
        continue;
      const double to = std::min(config.management.hr1_max_bpm, r.threshold + config.management.hr1_step_bpm);
      if (to > r.threshold) delta["hr1_threshold_bpm"] = {{"from", r.threshold}, {"to", to}};
      break;
    }
  }
  return delta;
}

}  // namespace egw::gateway
