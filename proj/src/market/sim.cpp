// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/market/sim.hpp"

#include <functional>
#include <iterator>

#include "egw/access/keyring.hpp"
#include "egw/common/hash.hpp"
#include "egw/common/random.hpp"

namespace egw::market {

namespace {

struct ParticipantSpec {
  std::string id, gateway;
  Units balance = 0;
};

struct BatchSpec {
  std::string id, owner, data_type;
  Units min_deposit = 0;
  Bytes plaintext;
};

enum class Forgery { None, WrongSigner, Stale, WrongSeller };

class Driver {
 public:
  Driver(TraceRun& run, access::CryptoSuite suite, std::uint64_t seed, std::int64_t start_ms, std::int64_t step_ms,
         bool record_rejections)
      : run_(run),
        market_(run.market),
        suite_(std::move(suite)),
        rng_(seed),
        now_(start_ms),
        step_(step_ms),
        record_rejections_(record_rejections) {}

  Drbg& rng() { return rng_; }
  std::int64_t now() const { return now_; }
  void tick() { now_ += step_; }
  void tick_random() { now_ += static_cast<std::int64_t>(rng_.uniform(static_cast<std::uint64_t>(step_) + 1)); }

  void setup(const std::vector<ParticipantSpec>& people, const std::vector<BatchSpec>& batches) {
    std::map<std::string, access::KeyRing> rings;
    for (const auto& p : people) {
      Participant who{p.id, suite_.signature->keygen(rng_), suite_.kem->keygen(rng_)};
      market_.register_device({p.id, p.gateway, who.sig.verification_key, who.kem.public_key, now_}, p.balance);
      rings.emplace(p.id, access::KeyRing::generate(rng_));
      run_.participants.emplace(p.id, std::move(who));
      ++run_.accepted;
    }
    std::map<std::string, std::uint64_t> next_index;
    for (const auto& b : batches) {
      auto ring = rings.find(b.owner);
      require(ring != rings.end(), ErrorKind::Config, "scenario: batch owner '" + b.owner + "' is not a participant");
      const Key32 key = ring->second.child(next_index[b.owner]++);
      auto enc = access::encrypt_batch(key, b.plaintext, b.id, b.data_type, rng_);
      const Digest digest = hash::sha256(stored_payload(enc));
      market_.list_batch({b.owner, std::move(enc), digest, b.min_deposit}, now_);
      run_.secrets.emplace(b.id, BatchSecret{key, b.plaintext});
      ++run_.accepted;
    }
  }

  /// Runs `fn` and records the attempt; errors are ordinary traffic here.
  std::optional<ErrorKind> attempt(const std::string& op, const std::string& target, const std::function<void()>& fn) {
    OpRecord rec{op, target, false, std::nullopt, states(), {}, market_.total_units(), 0, true};
    const auto height_before = market_.chain().size();
    Json snapshot;
    if (record_rejections_) snapshot = market_.state_json();
    try {
      fn();
    } catch (const Error& e) {
      rec.error = e.kind();
    }
    rec.after = states();
    rec.total_after = market_.total_units();
    rec.accepted = market_.chain().size() > height_before;
    if (rec.accepted)
      run_.accepted += market_.chain().size() - height_before;
    else if (record_rejections_)
      rec.rejected_without_change = market_.state_json() == snapshot;
    const auto err = rec.error;
    run_.ops.push_back(std::move(rec));
    return err;
  }

  std::optional<ErrorKind> deliver(const std::string& deal_id, Forgery kind) {
    std::optional<Deal> d;
    try {
      d = market_.deal(deal_id);
    } catch (const Error&) {
    }
    const std::string buyer_id = d ? d->buyer_id : pick_participant();
    const std::string seller_id = d ? d->seller_id : pick_participant();
    const std::string batch_id = d ? d->batch_id : pick_batch();
    const auto& signer = run_.participants.at(kind == Forgery::WrongSigner ? other(buyer_id) : buyer_id);
    const auto& seller = run_.participants.at(kind == Forgery::WrongSeller ? other(seller_id) : seller_id);
    const std::int64_t ts = kind == Forgery::Stale ? now_ - access::kFreshnessWindowMs - 1 : now_;
    const auto request = access::request_key(*suite_.signature, signer.sig.signing_key, buyer_id, batch_id, ts);
    const Key32 key = run_.secrets.at(batch_id).key;
    const auto err = attempt("deliver", deal_id, [&] {
      market_.deliver_deal_key(deal_id, request, key, seller.sig.signing_key, now_, rng_);
    });
    if (!err && kind == Forgery::None) buyer_check(deal_id);
    return err;
  }

  /// Drives every open deal to a terminal state through the ordinary API.
  void quiesce(int max_rounds) {
    for (int round = 0; round < max_rounds && !all_terminal(); ++round) {
      ++run_.settle_rounds;
      tick();
      attempt("settle", "", [&] { market_.settle(now_); });
      for (const auto& d : market_.deals()) {
        tick();
        switch (d.state) {
          case DealState::Confirmed: deliver(d.deal_id, Forgery::None); break;
          case DealState::KeyDelivered: {
            const bool satisfied = rng_.uniform(2) == 0;
            attempt("finalize", d.deal_id, [&] { market_.finalize(d.deal_id, satisfied, now_); });
            break;
          }
          case DealState::Disputed:
            attempt("resolve", d.deal_id, [&] { market_.resolve_dispute(d.deal_id, now_); });
            break;
          default: break;
        }
      }
    }
    run_.quiesced = all_terminal();
  }

  void random_step() {
    tick_random();
    switch (rng_.uniform(10)) {
      case 0:
      case 1: {
        const std::string buyer = rng_.uniform(12) == 0 ? std::string("stranger") : pick_participant();
        const std::string batch = rng_.uniform(12) == 0 ? std::string("no-such-batch") : pick_batch();
        const Units deposit = static_cast<Units>(rng_.uniform(80)) + 1;
        attempt("request", batch, [&] { market_.request_deal(buyer, batch, deposit, now_); });
        break;
      }
      case 2: {
        const auto id = pick_deal();
        attempt("confirm", id, [&] { market_.confirm_deal(id, now_); });
        break;
      }
      case 3: {
        const auto id = pick_deal();
        attempt("expire", id, [&] { market_.expire_deal(id, now_); });
        break;
      }
      case 4: attempt("settle", "", [&] { market_.settle(now_); }); break;
      case 5: {
        static constexpr Forgery kinds[] = {Forgery::None, Forgery::None, Forgery::None,
                                            Forgery::WrongSigner, Forgery::Stale, Forgery::WrongSeller};
        deliver(pick_deal(), kinds[rng_.uniform(std::size(kinds))]);
        break;
      }
      case 6:
      case 7: {
        const auto id = pick_deal();
        const bool satisfied = rng_.uniform(3) != 0;
        attempt("finalize", id, [&] { market_.finalize(id, satisfied, now_); });
        break;
      }
      case 8: {
        const auto id = pick_deal();
        attempt("resolve", id, [&] { market_.resolve_dispute(id, now_); });
        break;
      }
      default: {
        if (rng_.uniform(4) == 0) {
          const auto batch = pick_batch();
          const auto digest = market_.listing(batch).payload_digest;
          market_.storage().tamper(digest);
          run_.ops.push_back({"tamper", batch, false, std::nullopt, states(), states(), market_.total_units(),
                              market_.total_units(), true});
        } else {
          const auto id = pick_participant();
          const auto& p = run_.participants.at(id);
          attempt("register", id, [&] {
            market_.register_device({id, "gw-dup", p.sig.verification_key, p.kem.public_key, now_}, 1000);
          });
        }
        break;
      }
    }
  }

  std::string pick_deal() {
    const auto ds = market_.deals();
    if (ds.empty() || rng_.uniform(16) == 0) return "deal-unknown";
    return ds[rng_.uniform(ds.size())].deal_id;
  }

  std::string pick_participant() { return pick_key(run_.participants); }
  std::string pick_batch() { return pick_key(run_.secrets); }

 private:
  template <typename Map>
  std::string pick_key(const Map& m) {
    auto it = m.begin();
    std::advance(it, static_cast<long>(rng_.uniform(m.size())));
    return it->first;
  }

  bool all_terminal() const {
    for (const auto& d : market_.deals())
      if (!is_terminal(d.state)) return false;
    return true;
  }

  std::map<std::string, DealState> states() const {
    std::map<std::string, DealState> out;
    for (const auto& d : market_.deals()) out.emplace(d.deal_id, d.state);
    return out;
  }

  std::string other(const std::string& id) const {
    for (const auto& [pid, p] : run_.participants)
      if (pid != id) return pid;
    return id;
  }

  void buyer_check(const std::string& deal_id) {
    const Deal d = market_.deal(deal_id);
    const auto& buyer = run_.participants.at(d.buyer_id);
    const auto seller_vk = market_.device(d.seller_id).verification_key;
    const auto digest = market_.listing(d.batch_id).payload_digest;
    try {
      const Key32 key = access::open_envelope(suite_, *d.envelope, buyer.kem.secret_key, seller_vk);
      const auto stored = market_.storage().get(digest);
      if (!stored) return;
      const auto batch = access::EncryptedBatch::from_json(Json::parse(stored->begin(), stored->end()));
      if (access::decrypt_batch(key, batch) == run_.secrets.at(d.batch_id).plaintext) ++run_.decrypted_ok;
    } catch (const Error&) {
    } catch (const Json::exception&) {
    }
  }

  TraceRun& run_;
  Market& market_;
  access::CryptoSuite suite_;
  Drbg rng_;
  std::int64_t now_;
  std::int64_t step_;
  bool record_rejections_;
};

TraceRun empty_run(const access::CryptoSuite& suite) { return TraceRun{Market(suite), {}, {}, {}, 0, 0, false, 0}; }

Forgery forgery_from(const std::string& s) {
  if (s.empty() || s == "none") return Forgery::None;
  if (s == "wrong_signer") return Forgery::WrongSigner;
  if (s == "stale") return Forgery::Stale;
  if (s == "wrong_seller") return Forgery::WrongSeller;
  fail(ErrorKind::Config, "scenario: unknown forgery '" + s + "'");
}

}  // namespace

TraceRun run_random_trace(const access::CryptoSuite& suite, std::uint64_t seed, const TraceOptions& opts) {
  require(opts.participants >= 2 && opts.batches >= 1 && opts.steps >= 0, ErrorKind::Parameter,
          "random trace: need >= 2 participants and >= 1 batch");
  TraceRun run = empty_run(suite);
  Driver drv(run, suite, seed, 0, 1000, opts.record_rejections);
  std::vector<ParticipantSpec> people;
  for (int i = 0; i < opts.participants; ++i)
    people.push_back({"p" + std::to_string(i), "gw" + std::to_string(i % 2),
                      static_cast<Units>(drv.rng().uniform(151))});
  std::vector<BatchSpec> batches;
  for (int i = 0; i < opts.batches; ++i) {
    BatchSpec b{"b" + std::to_string(i), people[drv.rng().uniform(people.size())].id,
                drv.rng().uniform(2) == 0 ? "ecg" : "heart_rate", static_cast<Units>(drv.rng().uniform(36)) + 5, {}};
    b.plaintext = drv.rng().bytes(32 + drv.rng().uniform(225));
    batches.push_back(std::move(b));
  }
  drv.setup(people, batches);
  for (int s = 0; s < opts.steps; ++s) drv.random_step();
  drv.quiesce(opts.max_settle_rounds);
  return run;
}

ScenarioResult run_scenario(const Json& sc) {
  const auto suite = access::make_suite(sc.value("suite", std::string("classical")));
  ScenarioResult out{empty_run(suite), {}};
  try {
    Driver drv(out.run, suite, sc.value("seed", std::uint64_t{1}), sc.value("start_ms", std::int64_t{0}),
               sc.value("step_ms", std::int64_t{1000}), false);
    if (sc.contains("network")) out.run.market.attach_network(ledger::scenario_from_json(sc["network"]).net);

    std::vector<ParticipantSpec> people;
    for (const auto& p : sc.at("participants"))
      people.push_back({p.at("id").get<std::string>(), p.value("gateway", std::string("gw0")),
                        p.value("balance", Units{0})});
    std::vector<BatchSpec> batches;
    for (const auto& b : sc.value("batches", Json::array())) {
      BatchSpec spec{b.at("id").get<std::string>(), b.at("owner").get<std::string>(),
                     b.value("data_type", std::string("ecg")), b.value("min_deposit", Units{0}), {}};
      if (b.contains("plaintext"))
        spec.plaintext = to_bytes(b["plaintext"].get<std::string>());
      else
        spec.plaintext = drv.rng().bytes(b.value("size", std::size_t{128}));
      batches.push_back(std::move(spec));
    }
    drv.setup(people, batches);

    if (sc.contains("random")) {
      const auto& r = sc["random"];
      for (int s = 0; s < r.value("steps", 40); ++s) drv.random_step();
      drv.quiesce(r.value("max_settle_rounds", 8));
      out.log.push_back({{"op", "random"}, {"ok", out.run.quiesced}, {"steps", r.value("steps", 40)}});
    }
    for (const auto& op : sc.value("operations", Json::array())) {
      drv.tick();
      const auto name = op.at("op").get<std::string>();
      Json entry{{"op", name}};
      std::optional<ErrorKind> err;
      auto& m = out.run.market;
      if (name == "request") {
        err = drv.attempt(name, op.at("batch"), [&] {
          entry["result"] = m.request_deal(op.at("buyer").get<std::string>(), op.at("batch").get<std::string>(),
                                           op.at("deposit").get<Units>(), drv.now())
                                .deal_id;
        });
      } else if (name == "confirm") {
        err = drv.attempt(name, op.at("deal"), [&] {
          entry["result"] = to_string(m.confirm_deal(op.at("deal").get<std::string>(), drv.now()));
        });
      } else if (name == "expire") {
        err = drv.attempt(name, op.at("deal"), [&] {
          entry["result"] = to_string(m.expire_deal(op.at("deal").get<std::string>(), drv.now()));
        });
      } else if (name == "settle") {
        err = drv.attempt(name, "", [&] { entry["result"] = m.settle(drv.now()); });
      } else if (name == "deliver") {
        const auto id = op.at("deal").get<std::string>();
        err = drv.deliver(id, forgery_from(op.value("forgery", std::string("none"))));
        if (!err) entry["result"] = to_string(m.deal(id).state);
      } else if (name == "finalize") {
        err = drv.attempt(name, op.at("deal"), [&] {
          entry["result"] =
              to_string(m.finalize(op.at("deal").get<std::string>(), op.value("satisfied", true), drv.now()));
        });
      } else if (name == "resolve") {
        err = drv.attempt(name, op.at("deal"), [&] {
          entry["result"] = to_string(m.resolve_dispute(op.at("deal").get<std::string>(), drv.now()));
        });
      } else if (name == "tamper") {
        m.storage().tamper(m.listing(op.at("batch").get<std::string>()).payload_digest);
      } else if (name == "drop") {
        m.storage().drop(m.listing(op.at("batch").get<std::string>()).payload_digest);
      } else if (name == "quiesce") {
        drv.quiesce(op.value("max_rounds", 8));
        entry["result"] = out.run.quiesced;
      } else {
        fail(ErrorKind::Config, "scenario: unknown operation '" + name + "'");
      }
      entry["ok"] = !err.has_value();
      if (err) entry["error"] = std::string(to_string(*err));
      out.log.push_back(std::move(entry));
    }
  } catch (const Json::exception& e) {
    fail(ErrorKind::Config, std::string("scenario: ") + e.what());
  }
  return out;
}

}  // namespace egw::market
