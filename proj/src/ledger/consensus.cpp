// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/ledger/consensus.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>

#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"
#include "egw/common/random.hpp"

namespace egw::ledger {

std::string select_proposer(const std::vector<Validator>& validators, std::uint64_t round, std::uint64_t seed) {
  require(!validators.empty(), ErrorKind::Parameter, "select_proposer: no validators");
  std::uint64_t total = 0;
  for (const auto& v : validators) {
    require(total <= std::numeric_limits<std::uint64_t>::max() - v.stake, ErrorKind::Parameter,
            "select_proposer: total stake overflows");
    total += v.stake;
  }
  require(total > 0, ErrorKind::Parameter, "select_proposer: total stake is zero");

  Bytes in;
  append_u64_le(in, seed);
  append_u64_le(in, round);
  const Digest h = hash::sha256(in);
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = (u << 8) | h[static_cast<std::size_t>(i)];
  const auto point = static_cast<std::uint64_t>((static_cast<unsigned __int128>(u) * total) >> 64);

  std::uint64_t acc = 0;
  for (const auto& v : validators) {
    acc += v.stake;
    if (point < acc) return v.id;
  }
  return validators.back().id;  // unreachable: point < total
}

SimNet SimNet::fully_connected(std::size_t n, int fanout, std::uint64_t seed) {
  SimNet net;
  net.fanout = fanout;
  net.seed = seed;
  net.adjacency.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    net.nodes.push_back("n" + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) net.adjacency[i].push_back(j);
  }
  return net;
}

SimNet SimNet::from_edges(std::vector<std::string> nodes, const std::vector<std::pair<std::string, std::string>>& edges,
                          int fanout, std::uint64_t seed) {
  SimNet net;
  net.nodes = std::move(nodes);
  net.fanout = fanout;
  net.seed = seed;
  net.adjacency.resize(net.nodes.size());
  auto find = [&](const std::string& id) {
    auto it = std::find(net.nodes.begin(), net.nodes.end(), id);
    require(it != net.nodes.end(), ErrorKind::Config, "simnet: edge names unknown node '" + id + "'");
    return static_cast<std::size_t>(it - net.nodes.begin());
  };
  for (const auto& [a, b] : edges) {
    const auto i = find(a), j = find(b);
    if (i == j) continue;
    auto& ai = net.adjacency[i];
    if (std::find(ai.begin(), ai.end(), j) != ai.end()) continue;
    ai.push_back(j);
    net.adjacency[j].push_back(i);
  }
  for (auto& adj : net.adjacency) std::sort(adj.begin(), adj.end());
  return net;
}

std::size_t SimNet::index_of(const std::string& id) const {
  auto it = std::find(nodes.begin(), nodes.end(), id);
  require(it != nodes.end(), ErrorKind::Parameter, "simnet: unknown node '" + id + "'");
  return static_cast<std::size_t>(it - nodes.begin());
}

DeliveryReport gossip_broadcast(const SimNet& net, const std::string& origin, ByteView message) {
  require(net.adjacency.size() == net.nodes.size(), ErrorKind::Parameter, "gossip: adjacency size mismatch");
  require(net.fanout >= 1, ErrorKind::Parameter, "gossip: fanout must be >= 1");
  require(net.latency_min_ms >= 0 && net.latency_max_ms >= net.latency_min_ms, ErrorKind::Parameter,
          "gossip: bad latency range");
  const std::size_t src = net.index_of(origin);
  const std::size_t n = net.nodes.size();

  Bytes seed_material;
  append_u64_le(seed_material, net.seed);
  append(seed_material, as_bytes(origin));
  append(seed_material, hash::sha256(message));
  Drbg rng(seed_material);
  auto latency = [&] {
    const double u = static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
    return net.latency_min_ms + u * (net.latency_max_ms - net.latency_min_ms);
  };

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::optional<Receipt>> got(n);
  std::vector<std::size_t> heard_from(n, kNone);
  std::vector<std::vector<std::size_t>> peers(n);
  std::vector<std::size_t> next(n, 0);
  std::vector<bool> shuffled(n, false);
  got[src] = Receipt{0, 0.0, ""};

  DeliveryReport report;
  for (int round = 1;; ++round) {
    bool any_sender = false, any_new = false;
    std::vector<std::optional<Receipt>> arrivals(n);
    std::vector<std::size_t> arrival_from(n, kNone);
    for (std::size_t i = 0; i < n; ++i) {
      if (!got[i] || got[i]->round >= round) continue;
      if (!shuffled[i]) {
        for (auto j : net.adjacency[i])
          if (j != heard_from[i]) peers[i].push_back(j);
        for (std::size_t k = peers[i].size(); k > 1; --k) std::swap(peers[i][k - 1], peers[i][rng.uniform(k)]);
        shuffled[i] = true;
      }
      for (int f = 0; f < net.fanout && next[i] < peers[i].size(); ++f) {
        any_sender = true;
        const auto j = peers[i][next[i]++];
        ++report.messages;
        const double t = got[i]->time_ms + latency();
        if (got[j]) continue;
        if (!arrivals[j] || t < arrivals[j]->time_ms) {
          arrivals[j] = Receipt{round, t, net.nodes[i]};
          arrival_from[j] = i;
        }
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      if (arrivals[j]) {
        got[j] = arrivals[j];
        heard_from[j] = arrival_from[j];
        any_new = true;
      }
    if (any_new) report.rounds = round;
    if (!any_sender) break;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (got[i]) report.receipts.emplace(net.nodes[i], *got[i]);
  return report;
}

ConsensusReport simulate_consensus(const SimNet& net, const std::vector<Validator>& validators, int rounds,
                                   std::uint64_t seed) {
  require(rounds >= 0, ErrorKind::Parameter, "simulate_consensus: rounds must be >= 0");
  for (const auto& v : validators) net.index_of(v.id);

  ConsensusReport report;
  report.replicas.resize(net.nodes.size());
  for (int r = 0; r < rounds; ++r) {
    const auto proposer = select_proposer(validators, static_cast<std::uint64_t>(r), seed);
    const auto p = net.index_of(proposer);
    report.proposers.push_back(proposer);
    const Json body{{"proposer", proposer}, {"round", r}, {"type", "pos_round"}};
    const Block block = report.replicas[p].append_new(canonical_bytes(body), "consensus", std::int64_t{r} * 1000);

    SimNet round_net = net;
    round_net.seed = net.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(r + 1));
    const auto delivery = gossip_broadcast(round_net, proposer, block.hash);
    for (const auto& [id, receipt] : delivery.receipts) {
      const auto i = net.index_of(id);
      if (i == p) continue;
      try {
        report.replicas[i].append(block);
      } catch (const Error&) {
        // a replica that missed an earlier block cannot link this one
      }
    }
    const auto tip0 = report.replicas[0].tip();
    for (const auto& c : report.replicas) {
      const auto t = c.tip();
      if (t.has_value() != tip0.has_value() || (t && t->hash != tip0->hash)) report.tips_identical_every_round = false;
    }
    report.rounds = r + 1;
    report.tip = block.hash;
  }
  return report;
}

Scenario scenario_from_json(const Json& j) {
  try {
    std::vector<std::string> nodes;
    const auto& jn = j.at("nodes");
    if (jn.is_number_integer()) {
      for (int i = 0; i < jn.get<int>(); ++i) nodes.push_back("n" + std::to_string(i));
    } else {
      nodes = jn.get<std::vector<std::string>>();
    }
    require(!nodes.empty(), ErrorKind::Config, "scenario: no nodes");
    const int fanout = j.value("fanout", 3);
    const auto seed = j.value("seed", std::uint64_t{1});
    std::vector<std::pair<std::string, std::string>> edges;
    const Json topo = j.value("topology", Json("full"));
    if (topo.is_string()) {
      require(topo == "full", ErrorKind::Config, "scenario: topology must be \"full\" or an edge list");
      for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = a + 1; b < nodes.size(); ++b) edges.emplace_back(nodes[a], nodes[b]);
    } else {
      for (const auto& e : topo) edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    Scenario s{SimNet::from_edges(nodes, edges, fanout, seed), {}};
    if (j.contains("latency_ms")) {
      s.net.latency_min_ms = j["latency_ms"].at(0).get<double>();
      s.net.latency_max_ms = j["latency_ms"].at(1).get<double>();
    }
    if (j.contains("stakes")) {
      for (const auto& [id, stake] : j["stakes"].items()) {
        require(std::find(nodes.begin(), nodes.end(), id) != nodes.end(), ErrorKind::Config,
                "scenario: stake for unknown node '" + id + "'");
        s.validators.push_back({id, stake.get<std::uint64_t>()});
      }
    } else {
      for (const auto& id : nodes) s.validators.push_back({id, 1});
    }
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, std::string("scenario: ") + e.what());
  }
}

}  // namespace egw::ledger
