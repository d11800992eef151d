// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <doctest.h>

#include <openssl/sha.h>

#include <set>
#include <sstream>

#include "egw/access/keyring.hpp"
#include "egw/market/market.hpp"
#include "egw/market/sim.hpp"

using namespace egw;
using namespace egw::market;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an egw::Error");
  return ErrorKind::Parameter;
}

// Oracle: allowed transitions written out independently of the library.
const std::set<std::pair<std::string, std::string>> kAllowed = {
    {"Requested", "Confirmed"}, {"Confirmed", "KeyDelivered"}, {"KeyDelivered", "Finalized"},
    {"KeyDelivered", "Disputed"}, {"Disputed", "Refunded"},    {"Disputed", "Finalized"},
    {"Requested", "Refunded"},  // expiry of a deal whose deposit never meets the minimum
};

Digest openssl_sha256(ByteView data) {
  Digest d{};
  SHA256(data.data(), data.size(), d.data());
  return d;
}

struct World {
  access::CryptoSuite suite = access::make_suite("classical");
  Drbg rng{42};
  Market market{suite};
  std::map<std::string, Participant> people;
  std::int64_t now = 1000;

  void add(const std::string& id, Units balance) {
    Participant p{id, suite.signature->keygen(rng), suite.kem->keygen(rng)};
    market.register_device({id, "gw0", p.sig.verification_key, p.kem.public_key, now}, balance);
    people.emplace(id, std::move(p));
  }

  Key32 list(const std::string& owner, const std::string& batch_id, Units min_deposit,
             const std::string& type = "ecg") {
    const Key32 key = rng.array<32>();
    auto enc = access::encrypt_batch(key, as_bytes("rr=0.81;hr=74;" + batch_id), batch_id, type, rng);
    const auto digest = openssl_sha256(stored_payload(enc));
    market.list_batch({owner, std::move(enc), digest, min_deposit}, now);
    return key;
  }

  access::KeyRequest request(const std::string& buyer, const std::string& batch) {
    return access::request_key(*suite.signature, people.at(buyer).sig.signing_key, buyer, batch, now);
  }

  Deal deliver(const std::string& deal_id, const Key32& key) {
    const Deal d = market.deal(deal_id);
    return market.deliver_deal_key(deal_id, request(d.buyer_id, d.batch_id), key,
                                   people.at(d.seller_id).sig.signing_key, now, rng);
  }
};

}  // namespace

TEST_CASE("registration: accepted once, keys must be well formed") {
  World w;
  w.add("alice", 100);
  CHECK(w.market.is_registered("alice"));
  CHECK(w.market.balance("alice") == 100);
  CHECK(w.market.chain().size() == 1);

  const auto& a = w.people.at("alice");
  CHECK(kind_of([&] { w.market.register_device({"alice", "gw1", a.sig.verification_key, a.kem.public_key, 2000}); }) ==
        ErrorKind::Duplicate);
  Bytes short_vk(a.sig.verification_key.begin(), a.sig.verification_key.end() - 1);
  CHECK(kind_of([&] { w.market.register_device({"bob", "gw1", short_vk, a.kem.public_key, 2000}); }) ==
        ErrorKind::Parameter);
  CHECK(kind_of([&] { w.market.register_device({"bob", "gw1", a.sig.verification_key, Bytes(7), 2000}); }) ==
        ErrorKind::Parameter);
  CHECK(w.market.chain().size() == 1);

  w.list("alice", "b1", 10);
  CHECK(kind_of([&] { w.market.request_deal("mallory", "b1", 5, w.now); }) == ErrorKind::Authorization);
}

TEST_CASE("registration: ML-KEM / ML-DSA key sizes enforced in the pq suite") {
  Market m(access::make_suite("pq"));
  Drbg rng(3);
  const auto suite = access::make_suite("pq");
  const auto sig = suite.signature->keygen(rng);
  const auto kem = suite.kem->keygen(rng);
  CHECK(sig.verification_key.size() == 1312);
  CHECK(kem.public_key.size() == 800);
  m.register_device({"dev", "gw", sig.verification_key, kem.public_key, 0});
  const auto classical = access::make_suite("classical");
  const auto ckem = classical.kem->keygen(rng);
  CHECK(kind_of([&] { m.register_device({"dev2", "gw", sig.verification_key, ckem.public_key, 0}); }) ==
        ErrorKind::Parameter);
}

TEST_CASE("listing: queryable by type, digest matches an independent hash, sidechain entry") {
  World w;
  w.add("alice", 0);
  w.list("alice", "b1", 10, "ecg");
  w.list("alice", "b2", 10, "heart_rate");
  const auto ecg = w.market.query_listings("ecg");
  REQUIRE(ecg.size() == 1);
  CHECK(ecg[0].batch_id == "b1");
  CHECK(w.market.query_listings("glucose").empty());

  const auto stored = w.market.storage().get(ecg[0].payload_digest);
  REQUIRE(stored.has_value());
  CHECK(openssl_sha256(*stored) == ecg[0].payload_digest);
  CHECK(ecg[0].size == stored->size());

  const auto side = w.market.sidechain().by_batch("b1");
  REQUIRE(side.size() == 1);
  CHECK(side[0].block_hash == ecg[0].ledger_block);
  CHECK(side[0].metadata.owner_id == "alice");

  // claimed digest that does not match the payload
  auto enc = access::encrypt_batch(w.rng.array<32>(), as_bytes("x"), "b3", "ecg", w.rng);
  Digest wrong = openssl_sha256(stored_payload(enc));
  wrong[0] ^= 1;
  const auto height = w.market.chain().size();
  CHECK(kind_of([&] { w.market.list_batch({"alice", enc, wrong, 1}, w.now); }) == ErrorKind::Integrity);
  CHECK(w.market.chain().size() == height);
  CHECK(kind_of([&] { w.market.list_batch({"nobody", enc, openssl_sha256(stored_payload(enc)), 1}, w.now); }) ==
        ErrorKind::Authorization);
}

TEST_CASE("request_deal: escrow arithmetic and rejections") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  w.list("alice", "b1", 10);
  const Deal d = w.market.request_deal("bob", "b1", 10, w.now);
  CHECK(d.state == DealState::Requested);
  CHECK(w.market.balance("bob") == 90);
  CHECK(w.market.locked(d.deal_id) == 10);

  const auto before = w.market.state_json();
  CHECK(kind_of([&] { w.market.request_deal("bob", "b1", 91, w.now); }) == ErrorKind::InsufficientBalance);
  CHECK(kind_of([&] { w.market.request_deal("bob", "nope", 1, w.now); }) == ErrorKind::NotFound);
  CHECK(kind_of([&] { w.market.request_deal("bob", "b1", 0, w.now); }) == ErrorKind::Parameter);
  CHECK(w.market.state_json() == before);
}

TEST_CASE("confirm: inclusive minimum, otherwise stays Requested; expiry refunds") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  w.list("alice", "b1", 10);
  const auto at_min = w.market.request_deal("bob", "b1", 10, w.now).deal_id;
  const auto below = w.market.request_deal("bob", "b1", 9, w.now).deal_id;
  const auto height = w.market.chain().size();
  CHECK(w.market.confirm_deal(below, w.now) == DealState::Requested);
  CHECK(w.market.chain().size() == height);
  CHECK(w.market.confirm_deal(at_min, w.now) == DealState::Confirmed);
  CHECK(kind_of([&] { w.market.expire_deal(at_min, w.now); }) == ErrorKind::Transition);
  CHECK(w.market.expire_deal(below, w.now) == DealState::Refunded);
  CHECK(w.market.balance("bob") == 90);
  CHECK(w.market.locked(below) == 0);
}

TEST_CASE("settle confirms and expires in one pass") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  w.list("alice", "b1", 10);
  const auto ok = w.market.request_deal("bob", "b1", 15, w.now).deal_id;
  const auto low = w.market.request_deal("bob", "b1", 3, w.now).deal_id;
  const auto changed = w.market.settle(w.now);
  CHECK(changed.size() == 2);
  CHECK(w.market.deal(ok).state == DealState::Confirmed);
  CHECK(w.market.deal(low).state == DealState::Refunded);
  CHECK(w.market.settle(w.now).empty());
}

TEST_CASE("honest flow: buyer decrypts and the digest matches the listing") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  const Key32 key = w.list("alice", "b1", 10);
  const auto id = w.market.request_deal("bob", "b1", 10, w.now).deal_id;
  CHECK(kind_of([&] { w.deliver(id, key); }) == ErrorKind::Transition);  // before confirm
  w.market.confirm_deal(id, w.now);
  const Deal d = w.deliver(id, key);
  CHECK(d.state == DealState::KeyDelivered);
  REQUIRE(d.envelope.has_value());

  const auto& bob = w.people.at("bob");
  const Key32 opened = access::open_envelope(w.suite, *d.envelope, bob.kem.secret_key,
                                             w.market.device("alice").verification_key);
  CHECK(opened == key);
  const auto listing = w.market.listing("b1");
  const auto stored = *w.market.storage().get(listing.payload_digest);
  CHECK(openssl_sha256(stored) == listing.payload_digest);
  const auto batch = access::EncryptedBatch::from_json(Json::parse(stored.begin(), stored.end()));
  const auto plain = access::decrypt_batch(opened, batch);
  CHECK(std::string(plain.begin(), plain.end()) == "rr=0.81;hr=74;b1");

  CHECK(w.market.finalize(id, true, w.now) == DealState::Finalized);
  CHECK(w.market.balance("alice") == 10);
  CHECK(w.market.locked(id) == 0);
  CHECK(kind_of([&] { w.market.finalize(id, true, w.now); }) == ErrorKind::Transition);
  CHECK(kind_of([&] { w.market.confirm_deal(id, w.now); }) == ErrorKind::Transition);
}

TEST_CASE("delivery rejections leave the deal Confirmed with no envelope") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  w.add("eve", 0);
  const Key32 key = w.list("alice", "b1", 10);
  const auto id = w.market.request_deal("bob", "b1", 10, w.now).deal_id;
  w.market.confirm_deal(id, w.now);
  const auto before = w.market.state_json();

  auto forged = access::request_key(*w.suite.signature, w.people.at("eve").sig.signing_key, "bob", "b1", w.now);
  CHECK(kind_of([&] {
    w.market.deliver_deal_key(id, forged, key, w.people.at("alice").sig.signing_key, w.now, w.rng);
  }) == ErrorKind::Authorization);

  auto stale = access::request_key(*w.suite.signature, w.people.at("bob").sig.signing_key, "bob", "b1",
                                    w.now - access::kFreshnessWindowMs - 1);
  CHECK(kind_of([&] {
    w.market.deliver_deal_key(id, stale, key, w.people.at("alice").sig.signing_key, w.now, w.rng);
  }) == ErrorKind::Freshness);

  CHECK(kind_of([&] {
    w.market.deliver_deal_key(id, w.request("bob", "b1"), key, w.people.at("eve").sig.signing_key, w.now, w.rng);
  }) == ErrorKind::Authorization);

  auto other_batch = access::request_key(*w.suite.signature, w.people.at("bob").sig.signing_key, "bob", "b9", w.now);
  CHECK(kind_of([&] {
    w.market.deliver_deal_key(id, other_batch, key, w.people.at("alice").sig.signing_key, w.now, w.rng);
  }) == ErrorKind::Authorization);

  CHECK(w.market.state_json() == before);
  CHECK(w.market.deal(id).state == DealState::Confirmed);
  CHECK_FALSE(w.market.deal(id).envelope.has_value());
}

TEST_CASE("disputes: tampered payload refunds, intact payload pays, missing payload is a storage error") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  const Key32 k1 = w.list("alice", "b1", 10);
  const Key32 k2 = w.list("alice", "b2", 10);
  const Key32 k3 = w.list("alice", "b3", 10);
  auto open_deal = [&](const std::string& batch, const Key32& key) {
    const auto id = w.market.request_deal("bob", batch, 10, w.now).deal_id;
    w.market.confirm_deal(id, w.now);
    w.deliver(id, key);
    CHECK(w.market.finalize(id, false, w.now) == DealState::Disputed);
    CHECK(w.market.locked(id) == 10);
    return id;
  };
  const Units bob_start = w.market.balance("bob");
  const auto d1 = open_deal("b1", k1);
  w.market.storage().tamper(w.market.listing("b1").payload_digest);
  CHECK(w.market.resolve_dispute(d1, w.now) == DealState::Refunded);
  CHECK(w.market.balance("bob") == bob_start);

  const auto d2 = open_deal("b2", k2);
  CHECK(w.market.resolve_dispute(d2, w.now) == DealState::Finalized);
  CHECK(w.market.balance("alice") == 10);

  const auto d3 = open_deal("b3", k3);
  w.market.storage().drop(w.market.listing("b3").payload_digest);
  CHECK(kind_of([&] { w.market.resolve_dispute(d3, w.now); }) == ErrorKind::Storage);
  CHECK(w.market.deal(d3).state == DealState::Disputed);
  CHECK(w.market.locked(d3) == 10);
}

TEST_CASE("ledger: one block per accepted op, replay reconstructs the state, trace round-trips") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  const Key32 key = w.list("alice", "b1", 10);
  const auto id = w.market.request_deal("bob", "b1", 12, w.now).deal_id;
  w.market.settle(w.now);
  w.deliver(id, key);
  w.market.finalize(id, true, w.now);
  CHECK(w.market.chain().size() == 7);  // 2 register, list, request, confirm, deliver, finalize
  CHECK(ledger::verify_chain(w.market.chain().blocks()).ok);

  const auto replayed = Market::replay(w.suite, w.market.chain().blocks());
  CHECK(replayed.state_json() == w.market.state_json());
  CHECK(replayed.trace() == w.market.trace());

  std::ostringstream out;
  w.market.write_trace(out);
  std::istringstream in(out.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = Json::parse(line);
    CHECK(canonical_json(j) == line);
    CHECK(j.at("height").get<std::size_t>() == n++);
  }
  CHECK(n == 7);

  // a tampered block body breaks replay
  auto blocks = w.market.chain().blocks();
  blocks[3].body.back() ^= 1;
  CHECK(kind_of([&] { Market::replay(w.suite, blocks); }) == ErrorKind::Integrity);
}

TEST_CASE("operations with a time before the ledger tip are rejected") {
  World w;
  w.add("alice", 0);
  w.add("bob", 100);
  w.list("alice", "b1", 10);
  CHECK(kind_of([&] { w.market.request_deal("bob", "b1", 10, w.now - 1); }) == ErrorKind::Ordering);
  CHECK(w.market.balance("bob") == 100);
}

TEST_CASE("listing gossip reaches the network") {
  World w;
  w.market.attach_network(ledger::SimNet::fully_connected(9, 3, 5));
  w.add("alice", 0);
  w.list("alice", "b1", 1);
  const auto trace = w.market.trace();
  CHECK(trace.back().at("gossip_reached").get<int>() == 9);
}

TEST_CASE("random traces: conservation, legal transitions, quiescence, envelopes, replay") {
  const auto suite = access::make_suite("classical");
  std::size_t decrypted = 0, rejected = 0;
  std::set<std::string> seen_states;
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    CAPTURE(seed);
    auto run = run_random_trace(suite, seed);
    Market& m = run.market;
    const Units minted = m.minted_units();

    std::map<std::string, std::set<std::string>> visited;
    for (const auto& op : run.ops) {
      CHECK(op.total_before == minted);
      CHECK(op.total_after == minted);
      if (!op.accepted) {
        ++rejected;
        CHECK(op.rejected_without_change);
        CHECK(op.before == op.after);
      }
      for (const auto& [id, st] : op.after) {
        const std::string now_s(to_string(st));
        visited[id].insert(now_s);
        seen_states.insert(now_s);
        auto it = op.before.find(id);
        if (it == op.before.end()) {
          CHECK(st == DealState::Requested);
        } else if (it->second != st) {
          CHECK(kAllowed.contains({std::string(to_string(it->second)), now_s}));
        }
      }
    }
    CHECK(run.quiesced);
    for (const auto& d : m.deals()) {
      CHECK((d.state == DealState::Finalized || d.state == DealState::Refunded));
      if (d.envelope) CHECK(visited[d.deal_id].contains("Confirmed"));
      if (!visited[d.deal_id].contains("Confirmed")) CHECK_FALSE(d.envelope.has_value());
      CHECK(m.locked(d.deal_id) == 0);
    }
    CHECK(m.chain().size() == run.accepted);
    CHECK(Market::replay(suite, m.chain().blocks()).state_json() == m.state_json());
    decrypted += run.decrypted_ok;
  }
  CHECK(decrypted > 0);
  CHECK(rejected > 0);
  CHECK(seen_states.size() == 6);
}

TEST_CASE("random trace is deterministic per seed") {
  const auto suite = access::make_suite("classical");
  auto a = run_random_trace(suite, 77);
  auto b = run_random_trace(suite, 77);
  CHECK(a.market.trace() == b.market.trace());
}

TEST_CASE("scenario runner: scripted dispute flow") {
  const Json sc = Json::parse(R"({
    "suite": "classical", "seed": 9,
    "participants": [{"id": "alice", "balance": 0}, {"id": "bob", "balance": 50}],
    "batches": [{"id": "b1", "owner": "alice", "min_deposit": 10, "plaintext": "hr=70"}],
    "operations": [
      {"op": "request", "buyer": "bob", "batch": "b1", "deposit": 10},
      {"op": "deliver", "deal": "deal-1"},
      {"op": "settle"},
      {"op": "deliver", "deal": "deal-1", "forgery": "stale"},
      {"op": "deliver", "deal": "deal-1"},
      {"op": "finalize", "deal": "deal-1", "satisfied": false},
      {"op": "tamper", "batch": "b1"},
      {"op": "resolve", "deal": "deal-1"}
    ]})");
  const auto res = run_scenario(sc);
  REQUIRE(res.log.size() == 8);
  CHECK(res.log[0]["result"] == "deal-1");
  CHECK(res.log[1]["error"] == "transition");
  CHECK(res.log[3]["error"] == "freshness");
  CHECK(res.log[4]["result"] == "KeyDelivered");
  CHECK(res.log[7]["result"] == "Refunded");
  CHECK(res.run.market.balance("bob") == 50);
  CHECK(res.run.decrypted_ok == 1);

  CHECK(kind_of([] { run_scenario(Json::parse(R"({"participants": [], "operations": [{"op": "fly"}]})")); }) ==
        ErrorKind::Config);
}
