// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"

namespace egw::ledger {

struct SideChainMetadata {
  std::string batch_id;
  std::string data_type;
  std::uint64_t size = 0;
  std::string owner_id;
  std::int64_t timestamp_ms = 0;

  bool operator==(const SideChainMetadata&) const = default;
};

/// Hash and metadata only; payloads never live here.
struct SideChainEntry {
  Digest block_hash{};
  SideChainMetadata metadata;

  Json to_json() const;
  static SideChainEntry from_json(const Json& j);
  bool operator==(const SideChainEntry&) const = default;
};

class SideChainStore {
 public:
  /// Duplicate error if the block hash is already recorded.
  void record(const SideChainEntry& entry);
  /// NotFound if unknown.
  SideChainEntry by_hash(const Digest& block_hash) const;
  std::vector<SideChainEntry> by_batch(const std::string& batch_id) const;
  std::vector<SideChainEntry> entries() const;  // insertion order
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<SideChainEntry> entries_;
  std::map<Digest, std::size_t> index_;
};

}  // namespace egw::ledger
