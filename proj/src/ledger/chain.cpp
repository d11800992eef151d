// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/ledger/chain.hpp"

#include <istream>
#include <mutex>
#include <ostream>

#include "egw/common/hash.hpp"

namespace egw::ledger {
namespace {

template <typename Fn>
auto parse(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Format, std::string(what) + ": " + e.what());
  }
}

// Checks one block against its predecessor; throws with the failing rule.
void check_block(const Block& b, const Block* prev, std::uint64_t position) {
  require(b.header.hash() == b.hash, ErrorKind::Tamper, "recorded block hash does not match the header");
  require(hash::sha256(b.body) == b.header.payload_digest, ErrorKind::Tamper, "payload digest does not match the body");
  const Digest expected_prev = prev ? prev->hash : Digest{};
  require(b.header.prev_hash == expected_prev && b.header.height == position, ErrorKind::ForkAttempt,
          "block claiming height " + std::to_string(b.header.height) + " does not link at height " +
              std::to_string(position));
  if (prev)
    require(b.header.timestamp_ms >= prev->header.timestamp_ms, ErrorKind::Ordering,
            "timestamp goes backwards");
}

}  // namespace

Json BlockHeader::to_json() const {
  return Json{{"data_type", data_type}, {"height", height}, {"payload_digest", to_hex(payload_digest)},
              {"prev_hash", to_hex(prev_hash)}, {"timestamp_ms", timestamp_ms}};
}

BlockHeader BlockHeader::from_json(const Json& j) {
  return parse("block header", [&] {
    BlockHeader h;
    h.prev_hash = array_from_hex<32>(j.at("prev_hash").get<std::string>());
    h.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    h.data_type = j.at("data_type").get<std::string>();
    h.payload_digest = array_from_hex<32>(j.at("payload_digest").get<std::string>());
    h.height = j.at("height").get<std::uint64_t>();
    return h;
  });
}

Digest BlockHeader::hash() const { return canonical_digest(to_json()); }

Json Block::to_json() const {
  return Json{{"body", to_hex(body)}, {"hash", to_hex(hash)}, {"header", header.to_json()}};
}

Block Block::from_json(const Json& j) {
  return parse("block", [&] {
    return Block{BlockHeader::from_json(j.at("header")), from_hex(j.at("body").get<std::string>()),
                 array_from_hex<32>(j.at("hash").get<std::string>())};
  });
}

Block make_block(const std::optional<BlockHeader>& prev, ByteView body, const std::string& data_type,
                 std::int64_t timestamp_ms) {
  Block b;
  b.body.assign(body.begin(), body.end());
  b.header.data_type = data_type;
  b.header.timestamp_ms = timestamp_ms;
  b.header.payload_digest = hash::sha256(body);
  if (prev) {
    require(timestamp_ms >= prev->timestamp_ms, ErrorKind::Ordering,
            "make_block: timestamp " + std::to_string(timestamp_ms) + " precedes parent " +
                std::to_string(prev->timestamp_ms));
    b.header.prev_hash = prev->hash();
    b.header.height = prev->height + 1;
  }
  b.hash = b.header.hash();
  return b;
}

VerifyResult verify_chain(std::span<const Block> blocks) {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    try {
      check_block(blocks[i], i ? &blocks[i - 1] : nullptr, i);
    } catch (const Error& e) {
      return {false, i, e.kind(), e.what()};
    }
  }
  return {};
}

Chain::Chain(const Chain& other) {
  std::shared_lock lock(other.mutex_);
  blocks_ = other.blocks_;
}

Chain& Chain::operator=(const Chain& other) {
  if (this == &other) return *this;
  auto copy = other.blocks();
  std::unique_lock lock(mutex_);
  blocks_ = std::move(copy);
  return *this;
}

void Chain::append(const Block& block) {
  std::unique_lock lock(mutex_);
  check_block(block, blocks_.empty() ? nullptr : &blocks_.back(), blocks_.size());
  blocks_.push_back(block);
}

Block Chain::append_new(ByteView body, const std::string& data_type, std::int64_t timestamp_ms) {
  std::unique_lock lock(mutex_);
  auto prev = blocks_.empty() ? std::nullopt : std::optional<BlockHeader>(blocks_.back().header);
  Block b = make_block(prev, body, data_type, timestamp_ms);
  blocks_.push_back(b);
  return b;
}

std::size_t Chain::size() const {
  std::shared_lock lock(mutex_);
  return blocks_.size();
}

std::optional<Block> Chain::tip() const {
  std::shared_lock lock(mutex_);
  if (blocks_.empty()) return std::nullopt;
  return blocks_.back();
}

Block Chain::at(std::uint64_t height) const {
  std::shared_lock lock(mutex_);
  require(height < blocks_.size(), ErrorKind::NotFound, "chain: no block at height " + std::to_string(height));
  return blocks_[height];
}

std::vector<Block> Chain::blocks() const {
  std::shared_lock lock(mutex_);
  return blocks_;
}

void dump_chain(std::ostream& out, std::span<const Block> blocks) {
  for (const auto& b : blocks) out << canonical_json(b.to_json()) << '\n';
}

std::vector<Block> read_blocks(std::istream& in) {
  std::vector<Block> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(Block::from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      fail(ErrorKind::Format, "chain dump line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

Chain restore_chain(std::istream& in) {
  Chain c;
  for (const auto& b : read_blocks(in)) c.append(b);
  return c;
}

}  // namespace egw::ledger
