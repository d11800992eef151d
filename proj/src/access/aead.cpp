// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/aead.hpp"

#include <algorithm>

#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::access {
namespace {

Key32 subkey(const Key32& key, std::string_view label) { return hash::hmac_sha256(key, as_bytes(label)); }

void xor_keystream(const Key32& key, ByteView nonce, ByteView in, std::uint8_t* out) {
  const Key32 enc = subkey(key, "egw/aead/enc/v1");
  Bytes block_in(nonce.begin(), nonce.end());
  const std::size_t prefix = block_in.size();
  for (std::size_t off = 0, counter = 0; off < in.size(); off += 32, ++counter) {
    block_in.resize(prefix);
    append_u64_le(block_in, counter);
    const Digest ks = hash::hmac_sha256(enc, block_in);
    const std::size_t n = std::min<std::size_t>(32, in.size() - off);
    for (std::size_t i = 0; i < n; ++i) out[off + i] = in[off + i] ^ ks[i];
  }
}

Digest tag_of(const Key32& key, ByteView nonce, ByteView aad, ByteView ct) {
  Bytes msg;
  append_u64_le(msg, aad.size());
  append(msg, aad);
  append(msg, nonce);
  append_u64_le(msg, ct.size());
  append(msg, ct);
  return hash::hmac_sha256(subkey(key, "egw/aead/mac/v1"), msg);
}

Bytes batch_aad(const std::string& batch_id, const std::string& data_type, const Digest& digest) {
  return canonical_bytes(Json{{"batch_id", batch_id}, {"data_type", data_type}, {"plaintext_digest", to_hex(digest)}});
}

}  // namespace

Bytes seal(const Key32& key, ByteView nonce, ByteView aad, ByteView plaintext) {
  require(nonce.size() == kNonceBytes, ErrorKind::Parameter, "seal: nonce must be 16 bytes");
  Bytes out(plaintext.size() + kTagBytes);
  xor_keystream(key, nonce, plaintext, out.data());
  const Digest tag = tag_of(key, nonce, aad, ByteView(out.data(), plaintext.size()));
  std::copy(tag.begin(), tag.end(), out.begin() + static_cast<std::ptrdiff_t>(plaintext.size()));
  return out;
}

Bytes open(const Key32& key, ByteView nonce, ByteView aad, ByteView sealed) {
  require(nonce.size() == kNonceBytes, ErrorKind::Authentication, "open: nonce must be 16 bytes");
  require(sealed.size() >= kTagBytes, ErrorKind::Authentication, "open: ciphertext shorter than the tag");
  const auto ct = sealed.first(sealed.size() - kTagBytes);
  const Digest tag = tag_of(key, nonce, aad, ct);
  require(ct_equal(tag, sealed.last(kTagBytes)), ErrorKind::Authentication, "open: authentication tag mismatch");
  Bytes out(ct.size());
  xor_keystream(key, nonce, ct, out.data());
  return out;
}

Json EncryptedBatch::to_json() const {
  return Json{{"batch_id", batch_id}, {"ciphertext", to_hex(ciphertext)}, {"data_type", data_type},
              {"nonce", to_hex(nonce)}, {"plaintext_digest", to_hex(plaintext_digest)}};
}

EncryptedBatch EncryptedBatch::from_json(const Json& j) {
  try {
    return {j.at("batch_id").get<std::string>(), from_hex(j.at("nonce").get<std::string>()),
            from_hex(j.at("ciphertext").get<std::string>()),
            array_from_hex<32>(j.at("plaintext_digest").get<std::string>()), j.at("data_type").get<std::string>()};
  } catch (const Json::exception& e) {
    fail(ErrorKind::Format, std::string("encrypted batch: ") + e.what());
  }
}

EncryptedBatch encrypt_batch(const Key32& key, ByteView plaintext, const std::string& batch_id,
                             const std::string& data_type, ByteSource& rng) {
  require(!plaintext.empty(), ErrorKind::EmptyInput, "encrypt_batch: empty plaintext");
  EncryptedBatch b{batch_id, rng.bytes(kNonceBytes), {}, hash::sha256(plaintext), data_type};
  b.ciphertext = seal(key, b.nonce, batch_aad(batch_id, data_type, b.plaintext_digest), plaintext);
  return b;
}

Bytes decrypt_batch(const Key32& key, const EncryptedBatch& batch) {
  Bytes pt = open(key, batch.nonce, batch_aad(batch.batch_id, batch.data_type, batch.plaintext_digest), batch.ciphertext);
  require(ct_equal(hash::sha256(pt), batch.plaintext_digest), ErrorKind::Integrity,
          "decrypt_batch: plaintext digest mismatch");
  return pt;
}

}  // namespace egw::access
