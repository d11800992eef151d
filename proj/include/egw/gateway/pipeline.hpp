// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "egw/access/keyring.hpp"
#include "egw/arrhythmia/model.hpp"
#include "egw/dsp/signal.hpp"
#include "egw/gateway/config.hpp"
#include "egw/ledger/chain.hpp"
#include "egw/market/market.hpp"
#include "egw/triage/classify.hpp"

namespace egw::gateway {

// ---- models ---------------------------------------------------------------

struct Models {
  std::optional<triage::BinaryScreen> screen;
  std::optional<arrhythmia::TrainedModel> cnn;
};

/// Screen trained on beat features of synthetic normal and ventricular rhythms.
triage::BinaryScreen bootstrap_screen(const std::string& classifier, std::uint64_t seed, int sampling_rate);
/// Table-shaped CNN trained briefly on beat windows of synthetic rhythms
/// (normal -> class 0, ventricular -> class 2) plus synthetic templates for
/// the remaining classes. Good enough to exercise the pipeline, nothing more.
arrhythmia::TrainedModel bootstrap_cnn(const CnnBootstrap& opts, int sampling_rate);
/// From the configured files, bootstrapping whatever is not given.
Models load_models(const GatewayConfig& config);

// ---- monitor --------------------------------------------------------------

struct Chunk {
  std::size_t index = 0;
  dsp::EcgSignal signal;
  bool partial = false;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;
};

/// Fixed-length chunks; a shorter tail is emitted with `partial` set.
/// Config error when the stream rate differs from the configured rate.
std::vector<Chunk> monitor_ingest(const dsp::EcgSignal& stream, const GatewayConfig& config);

// ---- analyze --------------------------------------------------------------

enum class Verdict { Normal, Abnormal, Indeterminate };
std::string_view to_string(Verdict v);

/// Model outputs for one chunk. The verdict itself is settled in the plan
/// stage against the live alert rules (see decide()).
struct Analysis {
  std::size_t chunk = 0;
  bool analyzable = false;  // at least two R peaks
  std::size_t beats = 0;    // beats with features
  std::size_t screened_abnormal = 0;
  std::vector<double> heart_rate_bpm;
  std::array<std::size_t, arrhythmia::kNumClasses> cnn_counts{};
  dsp::Vector<double> approx;  // final wavelet approximation band, the retained representation
};

/// Features, screen and CNN over one chunk. State error when a model is
/// missing and the chunk has beats to score.
Analysis analyze_chunk(const Chunk& chunk, const Models& models, const GatewayConfig& config);

struct Decision {
  Verdict verdict = Verdict::Indeterminate;
  std::optional<triage::AlertEvent> alert;  // abnormal chunks only
  std::optional<int> cnn_class;             // abnormal chunks only
  bool morphology = false;                  // screen share reached abnormal_fraction
  bool heart_rate_rule = false;             // a heart-rate rule fired
};

/// Indeterminate without two R peaks. Abnormal when the screen flags at least
/// `abnormal_fraction` of the beats or a heart-rate rule fires. The alert is
/// the highest-priority heart-rate rule that fires, or priority 1 for a
/// morphology-only finding. The class is the most frequent non-normal CNN
/// prediction, or normal if there is none.
Decision decide(const Analysis& analysis, const GatewayConfig& config, std::int64_t timestamp_ms);

// ---- plan / execute -------------------------------------------------------

struct PipelineEvent {
  std::uint64_t seq = 0;
  std::string kind;  // ingest analysis alert notification raw_stored block_committed retry dead_letter reconfig
  std::string stage;  // monitor analyze plan execute manage
  std::optional<std::size_t> chunk;
  std::int64_t timestamp_ms = 0;
  Json payload = Json::object();

  Json to_json() const;
};

struct RawRecord {
  std::size_t chunk = 0;
  std::string reason;  // indeterminate | budget
  access::EncryptedBatch sealed;
};

/// Plan/Execute and system management around a KnowledgeBase. Feed chunks in
/// order with their analysis; call finish() once at the end.
class Gateway {
 public:
  Gateway(GatewayConfig config, Models models);

  void on_chunk(const Chunk& chunk, const Analysis& analysis);
  void finish();

  const std::vector<PipelineEvent>& events() const { return events_; }
  const ledger::Chain& chain() const { return chain_; }
  const market::Market& market() const { return market_; }
  market::Market& market() { return market_; }
  const KnowledgeBase& knowledge() const { return kb_; }
  const Models& models() const { return models_; }
  const std::vector<RawRecord>& raw_store() const { return raw_; }
  const std::vector<Json>& dead_letters() const { return dead_letters_; }
  /// Child key of batch `index`, as the data owner would derive it.
  Key32 batch_key(std::uint64_t index) const { return keyring_.child(index); }

 private:
  void emit(std::string kind, std::string stage, std::optional<std::size_t> chunk, Json payload);
  void advance_clock(std::int64_t t) { clock_ = std::max(clock_, t); }
  void flush(const std::string& reason);
  bool append_with_retry(const ledger::Block& block, const std::string& batch_id);
  void manage();

  KnowledgeBase kb_;
  Models models_;
  Drbg rng_;
  access::KeyRing keyring_;
  access::SignatureKeyPair sig_;
  access::KemKeyPair kem_;
  ledger::Chain chain_;
  market::Market market_;
  std::vector<PipelineEvent> events_;
  std::vector<Json> pending_;
  std::vector<RawRecord> raw_;
  std::vector<Json> dead_letters_;
  std::int64_t clock_ = 0;
  std::int64_t last_boundary_ms_ = 0;
  std::uint64_t next_batch_ = 0;
  std::uint64_t next_raw_ = 0;
  int append_attempts_ = 0;
  std::size_t chunks_seen_ = 0;
  std::size_t managed_upto_ = 0;
};

struct RunResult {
  std::unique_ptr<Gateway> gateway;
  std::size_t chunks = 0;
};

/// Monitor -> Analyze -> Plan/Execute over a whole signal. With
/// config.threaded the three stages run on their own threads joined by
/// queues; the event log is identical either way. Errors are rethrown with
/// the failing stage named in the message.
RunResult run_pipeline(const dsp::EcgSignal& signal, const GatewayConfig& config, Models models);

struct ReplayOutputs {
  std::filesystem::path events, chain, market_trace, knowledge, summary;
};

/// Reads the signal CSV and config, runs the pipeline and writes
/// events.ndjson, chain.ndjson, market_trace.ndjson, knowledge.json and
/// summary.json into `out_dir`.
ReplayOutputs run_replay(const std::filesystem::path& signal_path, const std::filesystem::path& config_path,
                         const std::filesystem::path& out_dir);
/// Same, with an already-parsed config and signal.
ReplayOutputs run_replay(const dsp::EcgSignal& signal, const GatewayConfig& config,
                         const std::filesystem::path& out_dir);

}  // namespace egw::gateway
