// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <algorithm>
#include <cstring>
#include <memory>

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>
#include <zlib.h>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"
#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"
#include "egw/common/random.hpp"

namespace egw {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Structure: return "structure";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::State: return "state";
    case ErrorKind::Training: return "training";
    case ErrorKind::Format: return "format";
    case ErrorKind::Checksum: return "checksum";
    case ErrorKind::ConfigMismatch: return "config-mismatch";
    case ErrorKind::Data: return "data";
    case ErrorKind::Authorization: return "authorization";
    case ErrorKind::Freshness: return "freshness";
    case ErrorKind::Signature: return "signature";
    case ErrorKind::Decapsulation: return "decapsulation";
    case ErrorKind::Authentication: return "authentication";
    case ErrorKind::Ordering: return "ordering";
    case ErrorKind::ForkAttempt: return "fork-attempt";
    case ErrorKind::Tamper: return "tamper";
    case ErrorKind::Duplicate: return "duplicate";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::InsufficientBalance: return "insufficient-balance";
    case ErrorKind::Transition: return "transition";
    case ErrorKind::Storage: return "storage";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

// ---------------------------------------------------------------- bytes

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {
int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view hex) {
  require(hex.size() % 2 == 0, ErrorKind::Format, "hex string has odd length");
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    require(hi >= 0 && lo >= 0, ErrorKind::Format, "invalid hex digit");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

void append(Bytes& out, ByteView more) { out.insert(out.end(), more.begin(), more.end()); }

void append_u64_le(Bytes& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

void append_u32_le(Bytes& out, std::uint32_t value) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

bool ct_equal(ByteView a, ByteView b) noexcept {
  if (a.size() != b.size()) return false;
  std::uint8_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc |= static_cast<std::uint8_t>(a[i] ^ b[i]);
  return acc == 0;
}

// ---------------------------------------------------------------- hashing

namespace hash {
namespace {

struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

void digest_into(const EVP_MD* md, ByteView data, std::uint8_t* out, std::size_t out_len, bool xof) {
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
  require(ctx != nullptr, ErrorKind::State, "EVP_MD_CTX_new failed");
  bool ok = EVP_DigestInit_ex(ctx.get(), md, nullptr) == 1 &&
            EVP_DigestUpdate(ctx.get(), data.data(), data.size()) == 1;
  if (xof) {
    ok = ok && EVP_DigestFinalXOF(ctx.get(), out, out_len) == 1;
  } else {
    unsigned int len = 0;
    ok = ok && EVP_DigestFinal_ex(ctx.get(), out, &len) == 1 && len == out_len;
  }
  require(ok, ErrorKind::State, "digest computation failed");
}

}  // namespace

Digest sha256(ByteView data) {
  Digest out{};
  digest_into(EVP_sha256(), data, out.data(), out.size(), false);
  return out;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  auto* res = HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
                   out.data(), &len);
  require(res != nullptr && len == out.size(), ErrorKind::State, "HMAC computation failed");
  return out;
}

Bytes shake128(ByteView data, std::size_t out_len) {
  Bytes out(out_len);
  digest_into(EVP_shake128(), data, out.data(), out_len, true);
  return out;
}

Bytes shake256(ByteView data, std::size_t out_len) {
  Bytes out(out_len);
  digest_into(EVP_shake256(), data, out.data(), out_len, true);
  return out;
}

Digest sha3_256(ByteView data) {
  Digest out{};
  digest_into(EVP_sha3_256(), data, out.data(), out.size(), false);
  return out;
}

std::array<std::uint8_t, 64> sha3_512(ByteView data) {
  std::array<std::uint8_t, 64> out{};
  digest_into(EVP_sha3_512(), data, out.data(), out.size(), false);
  return out;
}

std::uint32_t crc32(ByteView data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths
  std::size_t offset = 0;
  while (offset < data.size()) {
    auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - offset, 1u << 30));
    crc = ::crc32(crc, data.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace hash

// ---------------------------------------------------------------- randomness

void OsRandom::fill(std::span<std::uint8_t> out) {
  if (out.empty()) return;
  require(RAND_bytes(out.data(), static_cast<int>(out.size())) == 1, ErrorKind::State,
          "RAND_bytes failed");
}

Drbg::Drbg(std::uint64_t seed) {
  Bytes material = to_bytes("egw/drbg/u64");
  append_u64_le(material, seed);
  key_.fill(0x00);
  value_.fill(0x01);
  update(material);
}

Drbg::Drbg(ByteView seed_material) {
  key_.fill(0x00);
  value_.fill(0x01);
  update(seed_material);
}

void Drbg::update(ByteView provided) {
  Bytes buf(value_.begin(), value_.end());
  buf.push_back(0x00);
  append(buf, provided);
  key_ = hash::hmac_sha256(key_, buf);
  value_ = hash::hmac_sha256(key_, value_);
  if (provided.empty()) return;
  buf.assign(value_.begin(), value_.end());
  buf.push_back(0x01);
  append(buf, provided);
  key_ = hash::hmac_sha256(key_, buf);
  value_ = hash::hmac_sha256(key_, value_);
}

void Drbg::fill(std::span<std::uint8_t> out) {
  std::size_t offset = 0;
  while (offset < out.size()) {
    value_ = hash::hmac_sha256(key_, value_);
    auto n = std::min(out.size() - offset, value_.size());
    std::memcpy(out.data() + offset, value_.data(), n);
    offset += n;
  }
  update({});
}

std::uint64_t Drbg::next_u64() {
  std::array<std::uint8_t, 8> raw{};
  fill(raw);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | raw[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t Drbg::uniform(std::uint64_t bound) {
  require(bound > 0, ErrorKind::Parameter, "uniform bound must be positive");
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  for (;;) {
    auto v = next_u64();
    if (v < limit) return v % bound;
  }
}

// ---------------------------------------------------------------- canonical

std::string canonical_json(const Json& value) {
  try {
    return value.dump(-1, ' ', false);
  } catch (const Json::type_error& e) {
    fail(ErrorKind::Format, std::string("canonical json: ") + e.what());
  }
}

Digest canonical_digest(const Json& value) { return hash::sha256(canonical_bytes(value)); }

}  // namespace egw
