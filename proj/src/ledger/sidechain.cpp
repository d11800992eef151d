// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/ledger/sidechain.hpp"

#include <mutex>

#include "egw/common/error.hpp"

namespace egw::ledger {

Json SideChainEntry::to_json() const {
  return Json{{"block_hash", to_hex(block_hash)},
              {"metadata",
               {{"batch_id", metadata.batch_id},
                {"data_type", metadata.data_type},
                {"owner_id", metadata.owner_id},
                {"size", metadata.size},
                {"timestamp_ms", metadata.timestamp_ms}}}};
}

SideChainEntry SideChainEntry::from_json(const Json& j) {
  try {
    const auto& m = j.at("metadata");
    return {array_from_hex<32>(j.at("block_hash").get<std::string>()),
            {m.at("batch_id").get<std::string>(), m.at("data_type").get<std::string>(),
             m.at("size").get<std::uint64_t>(), m.at("owner_id").get<std::string>(),
             m.at("timestamp_ms").get<std::int64_t>()}};
  } catch (const Json::exception& e) {
    fail(ErrorKind::Format, std::string("sidechain entry: ") + e.what());
  }
}

void SideChainStore::record(const SideChainEntry& entry) {
  std::unique_lock lock(mutex_);
  require(!index_.contains(entry.block_hash), ErrorKind::Duplicate,
          "sidechain: block " + to_hex(entry.block_hash) + " is already recorded");
  index_.emplace(entry.block_hash, entries_.size());
  entries_.push_back(entry);
}

SideChainEntry SideChainStore::by_hash(const Digest& block_hash) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(block_hash);
  require(it != index_.end(), ErrorKind::NotFound, "sidechain: no entry for block " + to_hex(block_hash));
  return entries_[it->second];
}

std::vector<SideChainEntry> SideChainStore::by_batch(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  std::vector<SideChainEntry> out;
  for (const auto& e : entries_)
    if (e.metadata.batch_id == batch_id) out.push_back(e);
  return out;
}

std::vector<SideChainEntry> SideChainStore::entries() const {
  std::shared_lock lock(mutex_);
  return entries_;
}

std::size_t SideChainStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace egw::ledger
