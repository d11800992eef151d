// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/market/market.hpp"

#include <algorithm>
#include <ostream>

#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::market {

namespace {

constexpr const char* kDataType = "market";

bool legal_step(DealState from, DealState to) {
  using S = DealState;
  switch (from) {
    case S::Requested: return to == S::Confirmed || to == S::Refunded;
    case S::Confirmed: return to == S::KeyDelivered;
    case S::KeyDelivered: return to == S::Finalized || to == S::Disputed;
    case S::Disputed: return to == S::Refunded || to == S::Finalized;
    default: return false;
  }
}

Json listing_json(const BatchListing& l) {
  return {{"batch_id", l.batch_id},
          {"created_at_ms", l.created_at_ms},
          {"data_type", l.data_type},
          {"ledger_block", to_hex(l.ledger_block)},
          {"min_deposit", l.min_deposit},
          {"owner_id", l.owner_id},
          {"payload_digest", to_hex(l.payload_digest)},
          {"size", l.size}};
}

Json deal_json(const Deal& d) {
  return {{"batch_id", d.batch_id},
          {"buyer_id", d.buyer_id},
          {"deal_id", d.deal_id},
          {"deposit", d.deposit},
          {"envelope", d.envelope ? d.envelope->to_json() : Json(nullptr)},
          {"seller_id", d.seller_id},
          {"state", std::string(to_string(d.state))}};
}

}  // namespace

std::string_view to_string(DealState s) {
  switch (s) {
    case DealState::Requested: return "Requested";
    case DealState::Confirmed: return "Confirmed";
    case DealState::KeyDelivered: return "KeyDelivered";
    case DealState::Finalized: return "Finalized";
    case DealState::Disputed: return "Disputed";
    case DealState::Refunded: return "Refunded";
  }
  return "?";
}

DealState deal_state_from_string(std::string_view s) {
  for (auto st : {DealState::Requested, DealState::Confirmed, DealState::KeyDelivered, DealState::Finalized,
                  DealState::Disputed, DealState::Refunded})
    if (to_string(st) == s) return st;
  fail(ErrorKind::Format, "unknown deal state '" + std::string(s) + "'");
}

bool is_terminal(DealState s) { return s == DealState::Finalized || s == DealState::Refunded; }

Bytes stored_payload(const access::EncryptedBatch& batch) { return canonical_bytes(batch.to_json()); }

// ---- storage --------------------------------------------------------------

void StorageProvider::put(const Digest& digest, Bytes payload) { blobs_[digest] = std::move(payload); }

std::optional<Bytes> StorageProvider::get(const Digest& digest) const {
  auto it = blobs_.find(digest);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

void StorageProvider::tamper(const Digest& digest) {
  auto it = blobs_.find(digest);
  require(it != blobs_.end(), ErrorKind::NotFound, "storage: nothing stored under " + to_hex(digest));
  if (it->second.empty())
    it->second.push_back(0x01);
  else
    it->second[it->second.size() / 2] ^= 0x01;
}

void StorageProvider::drop(const Digest& digest) { blobs_.erase(digest); }

// ---- market ---------------------------------------------------------------

Market::Market(access::CryptoSuite suite) : suite_(std::move(suite)) {
  require(suite_.kem && suite_.signature, ErrorKind::Parameter, "market: incomplete crypto suite");
}

Market::Market(Market&& other) noexcept : suite_(other.suite_) {
  std::lock_guard lock(other.mutex_);
  chain_ = other.chain_;
  for (const auto& e : other.sidechain_.entries()) sidechain_.record(e);
  storage_ = std::move(other.storage_);
  network_ = std::move(other.network_);
  trace_ = std::move(other.trace_);
  devices_ = std::move(other.devices_);
  listings_ = std::move(other.listings_);
  deals_ = std::move(other.deals_);
  balances_ = std::move(other.balances_);
  locked_ = std::move(other.locked_);
  minted_ = other.minted_;
  next_deal_ = other.next_deal_;
}

void Market::attach_network(ledger::SimNet net) {
  std::lock_guard lock(mutex_);
  require(!net.nodes.empty(), ErrorKind::Parameter, "market: network has no nodes");
  network_ = std::move(net);
}

Json Market::commit(Json event, std::int64_t now_ms) {
  const auto tip = chain_.tip();
  require(!tip || now_ms >= tip->header.timestamp_ms, ErrorKind::Ordering,
          "market: operation time " + std::to_string(now_ms) + " precedes the ledger tip");
  event["ts"] = now_ms;
  const ledger::Block block = chain_.append_new(canonical_bytes(event), kDataType, now_ms);
  apply(event, block.hash);
  Json t = event;
  t["block_hash"] = to_hex(block.hash);
  t["height"] = block.header.height;
  trace_.push_back(std::move(t));
  return event;
}

void Market::apply(const Json& e, const Digest& block_hash) {
  const auto op = e.at("op").get<std::string>();
  auto check = [&](bool ok, const std::string& what) {
    require(ok, ErrorKind::Integrity, "market replay: " + op + ": " + what);
  };
  auto move_state = [&](Deal& d, DealState to) {
    check(legal_step(d.state, to), "illegal transition " + std::string(to_string(d.state)) + " -> " +
                                       std::string(to_string(to)));
    d.state = to;
  };
  auto release = [&](Deal& d, const std::string& to) {
    auto it = locked_.find(d.deal_id);
    check(it != locked_.end() && it->second == d.deposit, "escrow mismatch for " + d.deal_id);
    balances_[to] += it->second;
    locked_.erase(it);
  };
  auto deal_for = [&]() -> Deal& {
    auto it = deals_.find(e.at("deal_id").get<std::string>());
    check(it != deals_.end(), "unknown deal");
    return it->second;
  };

  if (op == "register") {
    DeviceRegistration r{e.at("device_id").get<std::string>(), e.at("gateway_id").get<std::string>(),
                         from_hex(e.at("verification_key").get<std::string>()),
                         from_hex(e.at("kem_public_key").get<std::string>()), e.at("ts").get<std::int64_t>()};
    check(!devices_.contains(r.device_id), "duplicate device");
    const Units opening = e.at("opening_balance").get<Units>();
    check(opening >= 0, "negative opening balance");
    balances_[r.device_id] += opening;
    minted_ += opening;
    devices_.emplace(r.device_id, std::move(r));
  } else if (op == "list") {
    BatchListing l{e.at("batch_id").get<std::string>(),
                   e.at("owner_id").get<std::string>(),
                   e.at("data_type").get<std::string>(),
                   e.at("size").get<std::uint64_t>(),
                   e.at("ts").get<std::int64_t>(),
                   array_from_hex<32>(e.at("payload_digest").get<std::string>()),
                   e.at("min_deposit").get<Units>(),
                   block_hash};
    check(devices_.contains(l.owner_id) && !listings_.contains(l.batch_id), "bad listing");
    sidechain_.record({block_hash, {l.batch_id, l.data_type, l.size, l.owner_id, l.created_at_ms}});
    listings_.emplace(l.batch_id, std::move(l));
  } else if (op == "request") {
    Deal d{e.at("deal_id").get<std::string>(), e.at("batch_id").get<std::string>(),
           e.at("buyer_id").get<std::string>(), e.at("seller_id").get<std::string>(), e.at("deposit").get<Units>(),
           DealState::Requested, std::nullopt};
    check(!deals_.contains(d.deal_id) && listings_.contains(d.batch_id), "bad deal");
    auto& bal = balances_[d.buyer_id];
    check(d.deposit > 0 && bal >= d.deposit, "deposit not covered");
    bal -= d.deposit;
    locked_[d.deal_id] = d.deposit;
    ++next_deal_;
    deals_.emplace(d.deal_id, std::move(d));
  } else if (op == "confirm") {
    move_state(deal_for(), DealState::Confirmed);
  } else if (op == "expire") {
    Deal& d = deal_for();
    move_state(d, DealState::Refunded);
    release(d, d.buyer_id);
  } else if (op == "deliver") {
    Deal& d = deal_for();
    move_state(d, DealState::KeyDelivered);
    d.envelope = access::KeyEnvelope::from_json(e.at("envelope"));
  } else if (op == "finalize") {
    Deal& d = deal_for();
    if (e.at("satisfied").get<bool>()) {
      move_state(d, DealState::Finalized);
      release(d, d.seller_id);
    } else {
      move_state(d, DealState::Disputed);
    }
  } else if (op == "resolve") {
    Deal& d = deal_for();
    const auto outcome = deal_state_from_string(e.at("outcome").get<std::string>());
    move_state(d, outcome);
    release(d, outcome == DealState::Refunded ? d.buyer_id : d.seller_id);
  } else {
    check(false, "unknown operation");
  }
}

void Market::register_device(const DeviceRegistration& reg, Units opening_balance) {
  std::lock_guard lock(mutex_);
  require(!reg.device_id.empty(), ErrorKind::Parameter, "register: empty device id");
  require(!devices_.contains(reg.device_id), ErrorKind::Duplicate,
          "register: device '" + reg.device_id + "' is already registered");
  require(reg.verification_key.size() == suite_.signature->verification_key_bytes(), ErrorKind::Parameter,
          "register: malformed verification key");
  require(reg.kem_public_key.size() == suite_.kem->public_key_bytes(), ErrorKind::Parameter,
          "register: malformed KEM public key");
  require(opening_balance >= 0, ErrorKind::Parameter, "register: negative opening balance");
  commit({{"op", "register"},
          {"device_id", reg.device_id},
          {"gateway_id", reg.gateway_id},
          {"verification_key", to_hex(reg.verification_key)},
          {"kem_public_key", to_hex(reg.kem_public_key)},
          {"opening_balance", opening_balance}},
         reg.registered_at_ms);
}

BatchListing Market::list_batch(const ListingRequest& req, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  require(devices_.contains(req.owner_id), ErrorKind::Authorization,
          "list: owner '" + req.owner_id + "' is not registered");
  require(!listings_.contains(req.batch.batch_id), ErrorKind::Duplicate,
          "list: batch '" + req.batch.batch_id + "' is already listed");
  require(req.min_deposit >= 0, ErrorKind::Parameter, "list: negative min_deposit");
  Bytes payload = stored_payload(req.batch);
  const Digest digest = hash::sha256(payload);
  require(digest == req.payload_digest, ErrorKind::Integrity,
          "list: claimed digest does not match the encrypted batch");

  Json event{{"op", "list"},
             {"batch_id", req.batch.batch_id},
             {"owner_id", req.owner_id},
             {"data_type", req.batch.data_type},
             {"size", payload.size()},
             {"payload_digest", to_hex(digest)},
             {"min_deposit", req.min_deposit}};
  if (network_) {
    const auto& gw = devices_.at(req.owner_id).gateway_id;
    const bool member = std::find(network_->nodes.begin(), network_->nodes.end(), gw) != network_->nodes.end();
    const Json announce{{"batch_id", req.batch.batch_id}, {"data_type", req.batch.data_type},
                        {"payload_digest", to_hex(digest)}, {"size", payload.size()}};
    const auto report =
        ledger::gossip_broadcast(*network_, member ? gw : network_->nodes.front(), canonical_bytes(announce));
    event["gossip_reached"] = report.receipts.size();
  }
  commit(std::move(event), now_ms);
  storage_.put(digest, std::move(payload));
  return listings_.at(req.batch.batch_id);
}

std::vector<BatchListing> Market::query_listings(const std::string& data_type) const {
  std::lock_guard lock(mutex_);
  std::vector<BatchListing> out;
  for (const auto& [id, l] : listings_)
    if (l.data_type == data_type) out.push_back(l);
  return out;
}

Deal Market::request_deal(const std::string& buyer_id, const std::string& batch_id, Units deposit,
                          std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  require(devices_.contains(buyer_id), ErrorKind::Authorization, "request: buyer '" + buyer_id + "' is not registered");
  auto it = listings_.find(batch_id);
  require(it != listings_.end(), ErrorKind::NotFound, "request: unknown batch '" + batch_id + "'");
  require(deposit > 0, ErrorKind::Parameter, "request: deposit must be positive");
  const auto bal = balances_.find(buyer_id);
  require(bal != balances_.end() && bal->second >= deposit, ErrorKind::InsufficientBalance,
          "request: balance does not cover the deposit");
  const std::string id = "deal-" + std::to_string(next_deal_);
  commit({{"op", "request"},
          {"deal_id", id},
          {"batch_id", batch_id},
          {"buyer_id", buyer_id},
          {"seller_id", it->second.owner_id},
          {"deposit", deposit}},
         now_ms);
  return deals_.at(id);
}

const Deal& Market::deal_ref(const std::string& id) const {
  auto it = deals_.find(id);
  require(it != deals_.end(), ErrorKind::NotFound, "unknown deal '" + id + "'");
  return it->second;
}

namespace {
void require_state(const Deal& d, DealState want, const char* op) {
  require(d.state == want, ErrorKind::Transition,
          std::string(op) + ": deal " + d.deal_id + " is " + std::string(to_string(d.state)) + ", needs " +
              std::string(to_string(want)));
}
}  // namespace

DealState Market::confirm_deal(const std::string& deal_id, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  const Deal& d = deal_ref(deal_id);
  require_state(d, DealState::Requested, "confirm");
  if (d.deposit < listings_.at(d.batch_id).min_deposit) return d.state;
  commit({{"op", "confirm"}, {"deal_id", deal_id}}, now_ms);
  return deals_.at(deal_id).state;
}

DealState Market::expire_deal(const std::string& deal_id, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  const Deal& d = deal_ref(deal_id);
  require_state(d, DealState::Requested, "expire");
  require(d.deposit < listings_.at(d.batch_id).min_deposit, ErrorKind::Transition,
          "expire: deal " + deal_id + " meets the deposit condition");
  commit({{"op", "expire"}, {"deal_id", deal_id}}, now_ms);
  return deals_.at(deal_id).state;
}

std::vector<std::string> Market::settle(std::int64_t now_ms) {
  std::vector<std::string> pending;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, d] : deals_)
      if (d.state == DealState::Requested) pending.push_back(id);
  }
  std::vector<std::string> changed;
  for (const auto& id : pending) {
    if (confirm_deal(id, now_ms) == DealState::Confirmed)
      changed.push_back(id);
    else if (expire_deal(id, now_ms) == DealState::Refunded)
      changed.push_back(id);
  }
  return changed;
}

Deal Market::deliver_deal_key(const std::string& deal_id, const access::KeyRequest& request, const Key32& batch_key,
                              ByteView seller_signing_key, std::int64_t now_ms, ByteSource& rng) {
  std::lock_guard lock(mutex_);
  const Deal& d = deal_ref(deal_id);
  require_state(d, DealState::Confirmed, "deliver");
  require(request.requester_id == d.buyer_id && request.batch_id == d.batch_id, ErrorKind::Authorization,
          "deliver: key request does not match deal " + deal_id);
  const auto& buyer = devices_.at(d.buyer_id);
  const auto& seller = devices_.at(d.seller_id);
  const auto env = access::deliver_key(suite_, request, buyer.verification_key, buyer.kem_public_key, batch_key,
                                       seller_signing_key, now_ms, rng);
  require(suite_.signature->verify(seller.verification_key, canonical_bytes(env.signed_payload()),
                                   env.envelope_signature),
          ErrorKind::Authorization, "deliver: signing key does not belong to seller '" + d.seller_id + "'");
  commit({{"op", "deliver"}, {"deal_id", deal_id}, {"envelope", env.to_json()}}, now_ms);
  return deals_.at(deal_id);
}

DealState Market::finalize(const std::string& deal_id, bool buyer_satisfied, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  require_state(deal_ref(deal_id), DealState::KeyDelivered, "finalize");
  commit({{"op", "finalize"}, {"deal_id", deal_id}, {"satisfied", buyer_satisfied}}, now_ms);
  return deals_.at(deal_id).state;
}

DealState Market::resolve_dispute(const std::string& deal_id, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  const Deal& d = deal_ref(deal_id);
  require_state(d, DealState::Disputed, "resolve");
  const auto& l = listings_.at(d.batch_id);
  const auto payload = storage_.get(l.payload_digest);
  require(payload.has_value(), ErrorKind::Storage, "resolve: payload for batch '" + l.batch_id + "' is unavailable");
  const Digest observed = hash::sha256(*payload);
  const DealState outcome = observed == l.payload_digest ? DealState::Finalized : DealState::Refunded;
  commit({{"op", "resolve"},
          {"deal_id", deal_id},
          {"observed_digest", to_hex(observed)},
          {"outcome", std::string(to_string(outcome))}},
         now_ms);
  return outcome;
}

// ---- queries --------------------------------------------------------------

Deal Market::deal(const std::string& deal_id) const {
  std::lock_guard lock(mutex_);
  return deal_ref(deal_id);
}

std::vector<Deal> Market::deals() const {
  std::lock_guard lock(mutex_);
  std::vector<Deal> out;
  for (const auto& [id, d] : deals_) out.push_back(d);
  return out;
}

BatchListing Market::listing(const std::string& batch_id) const {
  std::lock_guard lock(mutex_);
  auto it = listings_.find(batch_id);
  require(it != listings_.end(), ErrorKind::NotFound, "unknown batch '" + batch_id + "'");
  return it->second;
}

DeviceRegistration Market::device(const std::string& device_id) const {
  std::lock_guard lock(mutex_);
  auto it = devices_.find(device_id);
  require(it != devices_.end(), ErrorKind::NotFound, "unknown device '" + device_id + "'");
  return it->second;
}

bool Market::is_registered(const std::string& device_id) const {
  std::lock_guard lock(mutex_);
  return devices_.contains(device_id);
}

Units Market::balance(const std::string& account) const {
  std::lock_guard lock(mutex_);
  auto it = balances_.find(account);
  return it == balances_.end() ? 0 : it->second;
}

Units Market::locked(const std::string& deal_id) const {
  std::lock_guard lock(mutex_);
  auto it = locked_.find(deal_id);
  return it == locked_.end() ? 0 : it->second;
}

Units Market::total_units() const {
  std::lock_guard lock(mutex_);
  Units t = 0;
  for (const auto& [k, v] : balances_) t += v;
  for (const auto& [k, v] : locked_) t += v;
  return t;
}

Units Market::minted_units() const {
  std::lock_guard lock(mutex_);
  return minted_;
}

std::vector<Json> Market::trace() const {
  std::lock_guard lock(mutex_);
  return trace_;
}

void Market::write_trace(std::ostream& out) const {
  for (const auto& e : trace()) out << canonical_json(e) << '\n';
}

Json Market::state_json() const {
  std::lock_guard lock(mutex_);
  Json devices = Json::object(), listings = Json::object(), deals = Json::object();
  for (const auto& [id, r] : devices_)
    devices[id] = {{"gateway_id", r.gateway_id},
                   {"kem_public_key", to_hex(r.kem_public_key)},
                   {"registered_at_ms", r.registered_at_ms},
                   {"verification_key", to_hex(r.verification_key)}};
  for (const auto& [id, l] : listings_) listings[id] = listing_json(l);
  for (const auto& [id, d] : deals_) deals[id] = deal_json(d);
  Json sidechain = Json::array();
  for (const auto& e : sidechain_.entries()) sidechain.push_back(e.to_json());
  return {{"balances", balances_}, {"deals", deals},         {"devices", devices},     {"listings", listings},
          {"locked", locked_},     {"minted", minted_},      {"next_deal", next_deal_}, {"sidechain", sidechain}};
}

Market Market::replay(access::CryptoSuite suite, const std::vector<ledger::Block>& blocks) {
  const auto verdict = ledger::verify_chain(blocks);
  require(verdict.ok, ErrorKind::Integrity, "market replay: ledger does not verify: " + verdict.message);
  Market m(std::move(suite));
  for (const auto& b : blocks) {
    require(b.header.data_type == kDataType, ErrorKind::Integrity, "market replay: foreign block in market ledger");
    Json event;
    try {
      event = Json::parse(b.body.begin(), b.body.end());
    } catch (const Json::exception& ex) {
      fail(ErrorKind::Format, std::string("market replay: block body: ") + ex.what());
    }
    try {
      m.chain_.append(b);
      m.apply(event, b.hash);
    } catch (const Json::exception& ex) {
      fail(ErrorKind::Format, std::string("market replay: event: ") + ex.what());
    }
    Json t = event;
    t["block_hash"] = to_hex(b.hash);
    t["height"] = b.header.height;
    m.trace_.push_back(std::move(t));
  }
  return m;
}

}  // namespace egw::market
