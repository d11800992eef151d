// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"
#include "egw/common/error.hpp"

namespace egw::ledger {

struct BlockHeader {
  Digest prev_hash{};
  std::int64_t timestamp_ms = 0;
  std::string data_type;
  Digest payload_digest{};
  std::uint64_t height = 0;

  Json to_json() const;
  static BlockHeader from_json(const Json& j);
  /// SHA-256 of the canonical header JSON.
  Digest hash() const;
  bool operator==(const BlockHeader&) const = default;
};

struct Block {
  BlockHeader header;
  Bytes body;
  Digest hash{};  // recorded at creation, checked by verify_chain

  Json to_json() const;
  static Block from_json(const Json& j);
  bool operator==(const Block&) const = default;
};

/// No parent: genesis (zero prev-hash, height 0). Ordering error if the
/// timestamp goes backwards.
Block make_block(const std::optional<BlockHeader>& prev, ByteView body, const std::string& data_type,
                 std::int64_t timestamp_ms);

struct VerifyResult {
  bool ok = true;
  std::optional<std::uint64_t> first_bad_height;
  std::optional<ErrorKind> kind;
  std::string message;
};

/// Walks genesis to tip: recorded hash, height, payload digest, link, then
/// timestamp order. Reports the first failing position.
VerifyResult verify_chain(std::span<const Block> blocks);

/// Single-writer, multi-reader block store. Readers get copies.
class Chain {
 public:
  Chain() = default;
  Chain(const Chain& other);
  Chain& operator=(const Chain& other);

  /// ForkAttempt if the block does not extend the tip, Tamper on a digest
  /// or hash mismatch, Ordering on a timestamp regression.
  void append(const Block& block);
  /// make_block on the current tip, then append.
  Block append_new(ByteView body, const std::string& data_type, std::int64_t timestamp_ms);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::optional<Block> tip() const;
  Block at(std::uint64_t height) const;
  std::vector<Block> blocks() const;

 private:
  mutable std::shared_mutex mutex_;
  std::vector<Block> blocks_;
};

/// One canonical JSON block per line.
void dump_chain(std::ostream& out, std::span<const Block> blocks);
std::vector<Block> read_blocks(std::istream& in);
/// read_blocks, then append each (so the restored chain is verified).
Chain restore_chain(std::istream& in);

}  // namespace egw::ledger
