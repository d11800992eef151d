// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "egw/common/error.hpp"
#include "egw/market/market.hpp"

namespace egw::market {

/// Key material the simulated participants hold off-ledger.
struct Participant {
  std::string id;
  access::SignatureKeyPair sig;
  access::KemKeyPair kem;
};

struct BatchSecret {
  Key32 key{};
  Bytes plaintext;
};

/// One attempted operation with the deal states and unit totals around it.
struct OpRecord {
  std::string op;
  std::string target;  // deal or batch id, if any
  bool accepted = false;
  std::optional<ErrorKind> error;
  std::map<std::string, DealState> before, after;
  Units total_before = 0, total_after = 0;
  bool rejected_without_change = true;  // only meaningful when !accepted
};

struct TraceOptions {
  int participants = 4;
  int batches = 3;
  int steps = 40;
  int max_settle_rounds = 8;
  bool record_rejections = true;  // snapshot state around rejected ops
};

struct TraceRun {
  Market market;
  std::map<std::string, Participant> participants;
  std::map<std::string, BatchSecret> secrets;
  std::vector<OpRecord> ops;
  std::size_t accepted = 0;
  std::size_t decrypted_ok = 0;  // honest deliveries opened and decrypted by the buyer
  bool quiesced = false;
  int settle_rounds = 0;
};

/// Seeded random operation trace followed by settlement to quiescence.
TraceRun run_random_trace(const access::CryptoSuite& suite, std::uint64_t seed, const TraceOptions& opts = {});

/// Scenario file:
/// {"suite": "classical", "seed": 1, "start_ms": 0, "step_ms": 1000,
///  "participants": [{"id": "alice", "gateway": "gw0", "balance": 100}, ...],
///  "batches": [{"id": "b1", "owner": "alice", "data_type": "ecg", "min_deposit": 10,
///               "plaintext": "..." | "size": 256}, ...],
///  "operations": [{"op": "request", "buyer": "bob", "batch": "b1", "deposit": 10},
///                 {"op": "settle"}, {"op": "deliver", "deal": "deal-1"},
///                 {"op": "finalize", "deal": "deal-1", "satisfied": false},
///                 {"op": "tamper", "batch": "b1"}, {"op": "resolve", "deal": "deal-1"},
///                 {"op": "quiesce"}],
///  "random": {"steps": 40},   // alternative to "operations"
///  "network": {...}}          // optional gossip network (ledger scenario format)
struct ScenarioResult {
  TraceRun run;
  std::vector<Json> log;  // {"op", "ok", "error"?, "result"?} per scripted operation
};

ScenarioResult run_scenario(const Json& scenario);

}  // namespace egw::market
