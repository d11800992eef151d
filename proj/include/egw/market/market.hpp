// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egw/access/aead.hpp"
#include "egw/access/handshake.hpp"
#include "egw/common/canonical.hpp"
#include "egw/ledger/chain.hpp"
#include "egw/ledger/consensus.hpp"
#include "egw/ledger/sidechain.hpp"

namespace egw::market {

using Units = std::int64_t;

struct DeviceRegistration {
  std::string device_id;
  std::string gateway_id;
  Bytes verification_key;
  Bytes kem_public_key;
  std::int64_t registered_at_ms = 0;

  bool operator==(const DeviceRegistration&) const = default;
};

struct BatchListing {
  std::string batch_id;
  std::string owner_id;
  std::string data_type;
  std::uint64_t size = 0;  // stored payload bytes
  std::int64_t created_at_ms = 0;
  Digest payload_digest{};  // SHA-256 of the stored payload
  Units min_deposit = 0;
  Digest ledger_block{};    // block that recorded the listing

  bool operator==(const BatchListing&) const = default;
};

enum class DealState { Requested, Confirmed, KeyDelivered, Finalized, Disputed, Refunded };
std::string_view to_string(DealState s);
DealState deal_state_from_string(std::string_view s);
bool is_terminal(DealState s);

struct Deal {
  std::string deal_id;
  std::string batch_id;
  std::string buyer_id;
  std::string seller_id;
  Units deposit = 0;
  DealState state = DealState::Requested;
  std::optional<access::KeyEnvelope> envelope;

  bool operator==(const Deal&) const = default;
};

/// The stored payload is the canonical JSON of the encrypted batch.
Bytes stored_payload(const access::EncryptedBatch& batch);

/// In-process storage provider keyed by payload digest.
class StorageProvider {
 public:
  void put(const Digest& digest, Bytes payload);
  std::optional<Bytes> get(const Digest& digest) const;
  /// Test hooks: corrupt or drop a stored payload.
  void tamper(const Digest& digest);
  void drop(const Digest& digest);
  std::size_t size() const { return blobs_.size(); }

 private:
  std::map<Digest, Bytes> blobs_;
};

struct ListingRequest {
  std::string owner_id;
  access::EncryptedBatch batch;
  Digest payload_digest{};  // owner's claim, checked against the stored payload
  Units min_deposit = 0;
};

/// Market state machine. Every accepted operation appends exactly one ledger
/// block whose body is the canonical JSON event; `replay` folds those events
/// back into an identical state. Rejected operations change nothing.
class Market {
 public:
  explicit Market(access::CryptoSuite suite);
  Market(Market&& other) noexcept;

  /// Listings gossip hash+metadata over this network from the owner's
  /// gateway node (or the first node if the gateway is not a member).
  void attach_network(ledger::SimNet net);

  // setup: opening balances are the only place units enter
  void register_device(const DeviceRegistration& reg, Units opening_balance = 0);

  BatchListing list_batch(const ListingRequest& req, std::int64_t now_ms);
  std::vector<BatchListing> query_listings(const std::string& data_type) const;

  Deal request_deal(const std::string& buyer_id, const std::string& batch_id, Units deposit, std::int64_t now_ms);
  /// Confirms iff deposit >= min_deposit; otherwise leaves Requested and
  /// records nothing.
  DealState confirm_deal(const std::string& deal_id, std::int64_t now_ms);
  /// Requested deals that can never be confirmed (deposit below the minimum)
  /// are refunded in full.
  DealState expire_deal(const std::string& deal_id, std::int64_t now_ms);
  /// Periodic pass: confirm what can be confirmed, expire what cannot.
  std::vector<std::string> settle(std::int64_t now_ms);

  Deal deliver_deal_key(const std::string& deal_id, const access::KeyRequest& request, const Key32& batch_key,
                        ByteView seller_signing_key, std::int64_t now_ms, ByteSource& rng);
  DealState finalize(const std::string& deal_id, bool buyer_satisfied, std::int64_t now_ms);
  /// Digest equality between the stored payload and the listing. Storage
  /// error (deal stays Disputed) if the payload is gone.
  DealState resolve_dispute(const std::string& deal_id, std::int64_t now_ms);

  // queries
  Deal deal(const std::string& deal_id) const;
  std::vector<Deal> deals() const;
  BatchListing listing(const std::string& batch_id) const;
  DeviceRegistration device(const std::string& device_id) const;
  bool is_registered(const std::string& device_id) const;
  Units balance(const std::string& account) const;
  Units locked(const std::string& deal_id) const;
  Units total_units() const;   // balances + locked
  Units minted_units() const;  // sum of opening balances

  const ledger::Chain& chain() const { return chain_; }
  const ledger::SideChainStore& sidechain() const { return sidechain_; }
  StorageProvider& storage() { return storage_; }
  std::vector<Json> trace() const;
  void write_trace(std::ostream& out) const;
  /// Canonical snapshot of registrations, listings, deals and escrow.
  Json state_json() const;

  /// Rebuilds state from the ledger. Storage is not part of ledger state.
  static Market replay(access::CryptoSuite suite, const std::vector<ledger::Block>& blocks);

 private:
  Json commit(Json event, std::int64_t now_ms);  // caller holds the lock
  void apply(const Json& event, const Digest& block_hash);
  const Deal& deal_ref(const std::string& id) const;

  access::CryptoSuite suite_;
  mutable std::mutex mutex_;
  ledger::Chain chain_;
  ledger::SideChainStore sidechain_;
  StorageProvider storage_;
  std::optional<ledger::SimNet> network_;
  std::vector<Json> trace_;

  std::map<std::string, DeviceRegistration> devices_;
  std::map<std::string, BatchListing> listings_;
  std::map<std::string, Deal> deals_;
  std::map<std::string, Units> balances_;
  std::map<std::string, Units> locked_;
  Units minted_ = 0;
  std::uint64_t next_deal_ = 1;
};

}  // namespace egw::market
