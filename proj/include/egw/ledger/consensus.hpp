// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"
#include "egw/ledger/chain.hpp"

namespace egw::ledger {

struct Validator {
  std::string id;
  std::uint64_t stake = 0;
};

/// u = first 8 bytes (LE) of SHA-256(u64le(seed) | u64le(round)); the
/// proposer owns the cumulative-stake interval containing floor(u * total / 2^64).
std::string select_proposer(const std::vector<Validator>& validators, std::uint64_t round, std::uint64_t seed);

struct SimNet {
  std::vector<std::string> nodes;
  std::vector<std::vector<std::size_t>> adjacency;  // undirected, by node index
  int fanout = 3;
  double latency_min_ms = 5;
  double latency_max_ms = 50;
  std::uint64_t seed = 1;

  static SimNet fully_connected(std::size_t n, int fanout, std::uint64_t seed);
  /// Edges between node ids; unknown ids are a Config error.
  static SimNet from_edges(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges,
                           int fanout, std::uint64_t seed);
  std::size_t index_of(const std::string& id) const;  // Parameter error if unknown
};

struct Receipt {
  int round = 0;
  double time_ms = 0;
  std::string from;  // empty for the origin

  bool operator==(const Receipt&) const = default;
};

struct DeliveryReport {
  std::map<std::string, Receipt> receipts;  // reached nodes only
  int rounds = 0;                           // last round with a delivery
  std::uint64_t messages = 0;
};

/// Push gossip in discrete rounds. Every informed node forwards, from the
/// round after it was informed, to the next `fanout` peers of its own seeded
/// shuffle of its neighbours (skipping the peer it first heard from), until
/// it has contacted every neighbour. Ends when no node has peers left.
/// Latency is a seeded uniform draw used only for receipt times.
DeliveryReport gossip_broadcast(const SimNet& net, const std::string& origin, ByteView message);

struct ConsensusReport {
  int rounds = 0;
  std::vector<std::string> proposers;
  bool tips_identical_every_round = true;
  Digest tip{};
  std::vector<Chain> replicas;
};

/// Synchronous rounds: the stake-selected proposer extends its replica with
/// one block, gossips it, and every reached node appends it before the next
/// round. Validators are matched to nodes by id; nodes without a validator
/// entry have zero stake.
ConsensusReport simulate_consensus(const SimNet& net, const std::vector<Validator>& validators, int rounds,
                                   std::uint64_t seed);

/// {"nodes": 27 | ["a", ...], "topology": "full" | [["a","b"], ...],
///  "fanout": 3, "latency_ms": [5, 50], "seed": 1, "stakes": {"a": 1, ...}}
struct Scenario {
  SimNet net;
  std::vector<Validator> validators;
};
Scenario scenario_from_json(const Json& j);

}  // namespace egw::ledger
