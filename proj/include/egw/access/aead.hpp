// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <string>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"
#include "egw/common/random.hpp"

namespace egw::access {

inline constexpr std::size_t kNonceBytes = 16;
inline constexpr std::size_t kTagBytes = 32;

/// Encrypt-then-MAC stream construction. Subkeys are HMAC(key, label);
/// keystream block i = HMAC(enc_key, nonce | u64le(i)); the tag is
/// HMAC(mac_key, u64le(|aad|) | aad | nonce | u64le(|ct|) | ct) and is
/// appended to the ciphertext.
Bytes seal(const Key32& key, ByteView nonce, ByteView aad, ByteView plaintext);

/// Throws Authentication before any decryption if the tag does not verify.
Bytes open(const Key32& key, ByteView nonce, ByteView aad, ByteView sealed);

struct EncryptedBatch {
  std::string batch_id;
  Bytes nonce;
  Bytes ciphertext;  // includes the tag
  Digest plaintext_digest{};
  std::string data_type;

  Json to_json() const;
  static EncryptedBatch from_json(const Json& j);
  bool operator==(const EncryptedBatch&) const = default;
};

/// batch_id, data_type and the SHA-256 of the plaintext are bound as
/// associated data.
EncryptedBatch encrypt_batch(const Key32& key, ByteView plaintext, const std::string& batch_id,
                             const std::string& data_type, ByteSource& rng);

/// Authentication on tag failure, Integrity if the authenticated digest does
/// not match the recovered plaintext.
Bytes decrypt_batch(const Key32& key, const EncryptedBatch& batch);

}  // namespace egw::access
