// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/gateway/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "egw/arrhythmia/beats.hpp"
#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"
#include "egw/dsp/extract.hpp"
#include "egw/dsp/io.hpp"

namespace egw::gateway {

namespace {

constexpr int kAppendAttempts = 3;
constexpr std::int64_t kBackoffBaseMs = 100;

Json vec_json(const dsp::Vector<double>& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

[[noreturn]] void rethrow_staged(const std::string& stage, std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const Error& e) {
    throw Error(e.kind(), stage + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::State, stage + ": " + e.what());
  }
}

template <typename Fn>
auto staged(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (...) {
    rethrow_staged(stage, std::current_exception());
  }
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Normal: return "normal";
    case Verdict::Abnormal: return "abnormal";
    case Verdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

// ---- monitor --------------------------------------------------------------

std::vector<Chunk> monitor_ingest(const dsp::EcgSignal& stream, const GatewayConfig& config) {
  require(stream.sampling_rate == config.sampling_rate, ErrorKind::Config,
          "stream sampled at " + std::to_string(stream.sampling_rate) + " Hz, config expects " +
              std::to_string(config.sampling_rate) + " Hz");
  const auto len = static_cast<Eigen::Index>(std::llround(config.chunk_s * config.sampling_rate));
  std::vector<Chunk> out;
  for (Eigen::Index start = 0; start < stream.size(); start += len) {
    const Eigen::Index n = std::min(len, stream.size() - start);
    Chunk c;
    c.index = out.size();
    c.signal.sampling_rate = stream.sampling_rate;
    c.signal.samples = stream.samples.segment(start, n);
    c.partial = n < len;
    c.start_ms = config.start_ms + start * 1000 / stream.sampling_rate;
    c.end_ms = config.start_ms + (start + n) * 1000 / stream.sampling_rate;
    out.push_back(std::move(c));
  }
  return out;
}

// ---- analyze --------------------------------------------------------------

Analysis analyze_chunk(const Chunk& chunk, const Models& models, const GatewayConfig& config) {
  Analysis a;
  a.chunk = chunk.index;
  if (chunk.signal.size() < chunk.signal.sampling_rate) return a;  // under a second: nothing to find
  dsp::ExtractionConfig ec;
  ec.dwt_levels = config.dwt_levels;
  const auto ex = dsp::extract(chunk.signal, ec);
  a.approx = ex.coeffs.final_approx();
  a.analyzable = ex.marks.r_peaks.size() >= 2;
  if (!a.analyzable) return a;

  require(models.screen.has_value(), ErrorKind::State, "no triage model loaded");
  require(models.cnn.has_value(), ErrorKind::State, "no CNN model loaded");
  a.beats = ex.features.size();
  for (const auto& f : ex.features) a.screened_abnormal += models.screen->abnormal(f);
  a.heart_rate_bpm = ex.heart_rate_bpm;
  const auto windows = arrhythmia::beat_windows(ex.filtered, ex.marks.r_peaks);
  if (!windows.empty())
    for (int c : models.cnn->predict(windows)) ++a.cnn_counts[static_cast<std::size_t>(c)];
  return a;
}

Decision decide(const Analysis& analysis, const GatewayConfig& config, std::int64_t timestamp_ms) {
  Decision d;
  if (!analysis.analyzable) return d;
  d.morphology = analysis.beats > 0 && static_cast<double>(analysis.screened_abnormal) >=
                                           config.abnormal_fraction * static_cast<double>(analysis.beats);
  for (const auto& e :
       triage::raise_alerts(analysis.heart_rate_bpm, std::nullopt, std::nullopt, config.rules, timestamp_ms,
                            config.gateway_id))
    if (e.metric == triage::Metric::HeartRate && (!d.alert || e.priority > d.alert->priority)) d.alert = e;
  d.heart_rate_rule = d.alert.has_value();

  if (!d.morphology && !d.alert) {
    d.verdict = Verdict::Normal;
    return d;
  }
  d.verdict = Verdict::Abnormal;
  if (!d.alert)
    d.alert = triage::AlertEvent{1, triage::Metric::HeartRate, mean(analysis.heart_rate_bpm), timestamp_ms,
                                 config.gateway_id};
  int best = 0;
  for (int c = 1; c < arrhythmia::kNumClasses; ++c)
    if (analysis.cnn_counts[static_cast<std::size_t>(c)] > analysis.cnn_counts[static_cast<std::size_t>(best)] ||
        (best == 0 && analysis.cnn_counts[static_cast<std::size_t>(c)] > 0))
      best = c;
  d.cnn_class = best;
  return d;
}

// ---- plan / execute -------------------------------------------------------

Json PipelineEvent::to_json() const {
  return Json{{"chunk", chunk ? Json(*chunk) : Json(nullptr)},
              {"kind", kind},
              {"payload", payload},
              {"seq", seq},
              {"stage", stage},
              {"t_ms", timestamp_ms}};
}

Gateway::Gateway(GatewayConfig config, Models models)
    : kb_(std::move(config)),
      models_(std::move(models)),
      rng_(kb_.config().seed),
      keyring_(rng_.array<32>()),
      market_(access::make_suite(kb_.config().suite)) {
  const auto& cfg = kb_.config();
  const auto suite = access::make_suite(cfg.suite);
  sig_ = suite.signature->keygen(rng_);
  kem_ = suite.kem->keygen(rng_);
  clock_ = cfg.start_ms;
  last_boundary_ms_ = cfg.start_ms;
  chain_.append_new(canonical_bytes({{"gateway_id", cfg.gateway_id}, {"type", "genesis"}}), "genesis", cfg.start_ms);
  market_.register_device({cfg.gateway_id, cfg.gateway_id, sig_.verification_key, kem_.public_key, cfg.start_ms});
}

void Gateway::emit(std::string kind, std::string stage, std::optional<std::size_t> chunk, Json payload) {
  events_.push_back({events_.size(), std::move(kind), std::move(stage), chunk, clock_, std::move(payload)});
}

void Gateway::on_chunk(const Chunk& chunk, const Analysis& a) {
  const auto& cfg = kb_.config();
  advance_clock(chunk.end_ms);
  emit("ingest", "monitor", chunk.index,
       {{"end_ms", chunk.end_ms}, {"partial", chunk.partial}, {"samples", chunk.signal.size()},
        {"start_ms", chunk.start_ms}});

  const Decision d = decide(a, cfg, clock_);
  Json analysis{{"beats", a.beats},
                {"config_version", kb_.version()},
                {"hr_mean_bpm", a.heart_rate_bpm.empty() ? Json(nullptr) : Json(mean(a.heart_rate_bpm))},
                {"morphology", d.morphology},
                {"screened_abnormal", a.screened_abnormal},
                {"verdict", std::string(to_string(d.verdict))}};
  if (d.cnn_class) {
    analysis["cnn_class"] = std::string(arrhythmia::kClassShort[static_cast<std::size_t>(*d.cnn_class)]);
    analysis["cnn_counts"] = a.cnn_counts;
  }
  emit("analysis", "analyze", chunk.index, std::move(analysis));

  if (d.alert) {
    Json alert = d.alert->to_json();
    alert["cnn_class"] = std::string(arrhythmia::kClassShort[static_cast<std::size_t>(*d.cnn_class)]);
    alert["heart_rate_rule"] = d.heart_rate_rule;
    alert["morphology"] = d.morphology;
    emit("alert", "plan", chunk.index, std::move(alert));
    emit("notification", "execute", chunk.index,
         {{"priority", d.alert->priority}, {"recipients", Json::array({"patient", "provider"})}});
  }

  const bool raw = d.verdict == Verdict::Indeterminate ||
                   pending_.size() >= static_cast<std::size_t>(cfg.batch.max_pending_records);
  if (raw) {
    const std::string reason = d.verdict == Verdict::Indeterminate ? "indeterminate" : "budget";
    const auto index = next_raw_++;
    const Key32 key = access::derive_child_key(keyring_.derived_private(), index);
    const Json body{{"chunk", chunk.index},
                    {"sampling_rate", chunk.signal.sampling_rate},
                    {"samples", vec_json(chunk.signal.samples)},
                    {"start_ms", chunk.start_ms}};
    auto sealed = access::encrypt_batch(key, canonical_bytes(body), cfg.gateway_id + "-raw-" + std::to_string(index),
                                        "ecg_raw", rng_);
    emit("raw_stored", "execute", chunk.index,
         {{"bytes", sealed.ciphertext.size()},
          {"digest", to_hex(hash::sha256(market::stored_payload(sealed)))},
          {"reason", reason}});
    raw_.push_back({chunk.index, reason, std::move(sealed)});
  } else {
    Json rec{{"approx", vec_json(a.approx)},
             {"beats", a.beats},
             {"chunk", chunk.index},
             {"end_ms", chunk.end_ms},
             {"hr_bpm", a.heart_rate_bpm},
             {"start_ms", chunk.start_ms},
             {"verdict", std::string(to_string(d.verdict))}};
    if (d.cnn_class) rec["cnn_class"] = *d.cnn_class;
    pending_.push_back(std::move(rec));
  }

  FeedbackEntry fb{chunk.index, std::string(to_string(d.verdict)), d.alert ? d.alert->priority : 0, d.cnn_class,
                   std::nullopt, clock_};
  const double mid_s = 0.5 * static_cast<double>(chunk.start_ms + chunk.end_ms - 2 * cfg.start_ms) / 1000.0;
  for (const auto& l : cfg.labels)
    if (mid_s >= l.start_s && mid_s < l.end_s) fb.truth_abnormal = l.abnormal;
  kb_.record(std::move(fb));
  ++chunks_seen_;

  const auto period_ms = static_cast<std::int64_t>(std::llround(kb_.config().batch.period_s * 1000));
  bool due = false;
  while (chunk.end_ms >= last_boundary_ms_ + period_ms) {
    last_boundary_ms_ += period_ms;
    due = true;
  }
  if (due) flush("period");

  if (chunks_seen_ - managed_upto_ >= static_cast<std::size_t>(kb_.config().management.window_chunks)) manage();
}

void Gateway::finish() { flush("shutdown"); }

bool Gateway::append_with_retry(const ledger::Block& block, const std::string& batch_id) {
  const auto& fails = kb_.config().fail_appends;
  std::string last_error;
  for (int attempt = 1; attempt <= kAppendAttempts; ++attempt) {
    ++append_attempts_;
    try {
      require(std::find(fails.begin(), fails.end(), append_attempts_) == fails.end(), ErrorKind::Storage,
              "simulated ledger append failure");
      chain_.append(block);
      return true;
    } catch (const Error& e) {
      last_error = e.what();
    }
    if (attempt < kAppendAttempts) {
      const std::int64_t backoff = kBackoffBaseMs << (attempt - 1);
      emit("retry", "execute", std::nullopt,
           {{"attempt", attempt}, {"backoff_ms", backoff}, {"batch_id", batch_id}, {"error", last_error}});
      clock_ += backoff;
    }
  }
  emit("dead_letter", "execute", std::nullopt,
       {{"attempts", kAppendAttempts}, {"batch_id", batch_id}, {"error", last_error}});
  return false;
}

void Gateway::flush(const std::string& reason) {
  if (pending_.empty()) return;
  const auto& cfg = kb_.config();
  const auto index = next_batch_++;
  const std::string batch_id = cfg.gateway_id + "-batch-" + std::to_string(index);
  const Json plain{{"batch_index", index}, {"gateway_id", cfg.gateway_id}, {"records", pending_}};
  const std::size_t records = pending_.size();
  pending_.clear();

  auto enc = access::encrypt_batch(keyring_.child(index), canonical_bytes(plain), batch_id, "ecg_batch", rng_);
  const auto block = ledger::make_block(chain_.tip()->header, canonical_bytes(enc.to_json()), "ecg_batch", clock_);
  if (!append_with_retry(block, batch_id)) {
    dead_letters_.push_back({{"batch_id", batch_id}, {"records", records}, {"sealed", enc.to_json()}});
    return;
  }
  const Digest digest = hash::sha256(market::stored_payload(enc));
  const auto listing = market_.list_batch({cfg.gateway_id, std::move(enc), digest, cfg.min_deposit}, clock_);
  emit("block_committed", "execute", std::nullopt,
       {{"batch_id", batch_id},
        {"block_hash", to_hex(block.hash)},
        {"height", block.header.height},
        {"listing_block", to_hex(listing.ledger_block)},
        {"payload_digest", to_hex(digest)},
        {"reason", reason},
        {"records", records}});
}

void Gateway::manage() {
  const auto& fb = kb_.feedback();
  const std::vector<FeedbackEntry> window(fb.begin() + static_cast<long>(managed_upto_), fb.end());
  managed_upto_ = fb.size();
  const Json delta = management_delta(kb_.config(), kb_.initial_period_s(), window);
  if (delta.empty()) return;
  const int version = kb_.apply(delta, clock_);
  emit("reconfig", "manage", std::nullopt, {{"delta", delta}, {"version", version}});
}

// ---- runners --------------------------------------------------------------

namespace {

template <typename T>
class Channel {
 public:
  bool push(T v) {
    std::lock_guard lock(m_);
    if (closed_) return false;
    q_.push_back(std::move(v));
    cv_.notify_one();
    return true;
  }
  std::optional<T> pop() {
    std::unique_lock lock(m_);
    cv_.wait(lock, [&] { return closed_ || !q_.empty(); });
    if (q_.empty()) return std::nullopt;
    T v = std::move(q_.front());
    q_.pop_front();
    return v;
  }
  void close() {
    std::lock_guard lock(m_);
    closed_ = true;
    cv_.notify_all();
  }
  /// Consumer-side abort: drop what is queued and refuse further pushes.
  void abort() {
    std::lock_guard lock(m_);
    closed_ = true;
    q_.clear();
    cv_.notify_all();
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  std::deque<T> q_;
  bool closed_ = false;
};

}  // namespace

RunResult run_pipeline(const dsp::EcgSignal& signal, const GatewayConfig& config, Models models) {
  RunResult result;
  result.gateway = staged("plan", [&] { return std::make_unique<Gateway>(config, std::move(models)); });
  Gateway& gw = *result.gateway;
  const Models& m = gw.models();

  if (!config.threaded) {
    const auto chunks = staged("monitor", [&] { return monitor_ingest(signal, config); });
    for (const auto& c : chunks) {
      const auto a = staged("analyze", [&] { return analyze_chunk(c, m, config); });
      staged("plan", [&] { gw.on_chunk(c, a); });
    }
    staged("execute", [&] { gw.finish(); });
    result.chunks = chunks.size();
    return result;
  }

  // Rate check up front so the monitor thread cannot fail on configuration.
  staged("monitor", [&] { return monitor_ingest(dsp::EcgSignal{dsp::Vector<double>(0), signal.sampling_rate}, config); });
  Channel<Chunk> to_analyze;
  Channel<std::pair<Chunk, Analysis>> to_plan;
  std::exception_ptr monitor_error, analyze_error;

  std::thread monitor([&] {
    try {
      for (auto& c : monitor_ingest(signal, config))
        if (!to_analyze.push(std::move(c))) break;
    } catch (...) {
      monitor_error = std::current_exception();
    }
    to_analyze.close();
  });
  std::thread analyzer([&] {
    try {
      while (auto c = to_analyze.pop()) {
        auto a = analyze_chunk(*c, m, config);
        if (!to_plan.push({std::move(*c), std::move(a)})) break;
      }
    } catch (...) {
      analyze_error = std::current_exception();
      to_analyze.abort();
    }
    to_plan.close();
  });

  std::exception_ptr plan_error;
  try {
    while (auto item = to_plan.pop()) {
      gw.on_chunk(item->first, item->second);
      ++result.chunks;
    }
  } catch (...) {
    plan_error = std::current_exception();
    to_plan.abort();
    to_analyze.abort();
  }
  monitor.join();
  analyzer.join();
  if (monitor_error) rethrow_staged("monitor", monitor_error);
  if (analyze_error) rethrow_staged("analyze", analyze_error);
  if (plan_error) rethrow_staged("plan", plan_error);
  staged("execute", [&] { gw.finish(); });
  return result;
}

ReplayOutputs run_replay(const dsp::EcgSignal& signal, const GatewayConfig& config,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto models = staged("models", [&] { return load_models(config); });
  auto run = run_pipeline(signal, config, std::move(models));
  const Gateway& gw = *run.gateway;

  ReplayOutputs out{out_dir / "events.ndjson", out_dir / "chain.ndjson", out_dir / "market_trace.ndjson",
                    out_dir / "knowledge.json", out_dir / "summary.json"};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    require(f.good(), ErrorKind::Io, "cannot write '" + p.string() + "'");
    return f;
  };
  std::string log;
  for (const auto& e : gw.events()) log += canonical_json(e.to_json()) + "\n";
  {
    auto f = open(out.events);
    f << log;
  }
  {
    auto f = open(out.chain);
    const auto blocks = gw.chain().blocks();
    ledger::dump_chain(f, blocks);
  }
  {
    auto f = open(out.market_trace);
    gw.market().write_trace(f);
  }
  {
    auto f = open(out.knowledge);
    f << canonical_json(gw.knowledge().to_json()) << "\n";
  }
  std::map<std::string, std::size_t> kinds;
  for (const auto& e : gw.events()) ++kinds[e.kind];
  Json summary{{"chain_height", gw.chain().size()},
               {"chunks", run.chunks},
               {"config_version", gw.knowledge().version()},
               {"dead_letters", gw.dead_letters().size()},
               {"event_counts", kinds},
               {"event_log_sha256", to_hex(hash::sha256(as_bytes(log)))},
               {"events", gw.events().size()},
               {"market_blocks", gw.market().chain().size()},
               {"raw_records", gw.raw_store().size()},
               {"threaded", config.threaded}};
  {
    auto f = open(out.summary);
    f << canonical_json(summary) << "\n";
  }
  return out;
}

ReplayOutputs run_replay(const std::filesystem::path& signal_path, const std::filesystem::path& config_path,
                         const std::filesystem::path& out_dir) {
  const auto config = staged("config", [&] { return GatewayConfig::load(config_path); });
  const auto signal = staged("monitor", [&] { return dsp::read_signal_csv(signal_path); });
  return run_replay(signal, config, out_dir);
}

}  // namespace egw::gateway
