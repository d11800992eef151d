// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <string>

#include "egw/access/crypto.hpp"
#include "egw/common/canonical.hpp"

namespace egw::access {

inline constexpr std::int64_t kFreshnessWindowMs = 60'000;

struct KeyRequest {
  std::string requester_id;
  std::string batch_id;
  std::int64_t timestamp_ms = 0;
  Bytes signature;

  /// The signed fields: {"batch_id","requester_id","timestamp_ms","type":"key_request"}.
  Json signed_payload() const;
  Json to_json() const;
  static KeyRequest from_json(const Json& j);
  bool operator==(const KeyRequest&) const = default;
};

KeyRequest request_key(const SignatureInterface& sig, ByteView signing_key, const std::string& requester_id,
                       const std::string& batch_id, std::int64_t timestamp_ms);

bool verify_request(const SignatureInterface& sig, ByteView verification_key, const KeyRequest& request);

struct KeyEnvelope {
  std::string batch_id;
  std::string requester_id;
  std::string kem_algorithm;
  std::string signature_algorithm;
  Bytes kem_ciphertext;
  Bytes wrap_nonce;
  Bytes wrapped_batch_key;
  Bytes request_signature;
  Bytes envelope_signature;  // sender's signature over every other field

  Json signed_payload() const;
  Json to_json() const;
  static KeyEnvelope from_json(const Json& j);
  bool operator==(const KeyEnvelope&) const = default;
};

/// Checks the request signature (Authorization) and its age against `now_ms`
/// (Freshness, either direction beyond the window), then encapsulates to the
/// requester, wraps the batch key and signs the envelope.
KeyEnvelope deliver_key(const CryptoSuite& suite, const KeyRequest& request, ByteView requester_verification_key,
                        ByteView requester_kem_public_key, const Key32& batch_key, ByteView sender_signing_key,
                        std::int64_t now_ms, ByteSource& rng);

/// Signature first (Signature), then decapsulation (Decapsulation), then the
/// unwrap (Authentication). Nothing is decrypted before the signature checks.
Key32 open_envelope(const CryptoSuite& suite, const KeyEnvelope& envelope, ByteView own_kem_secret_key,
                    ByteView sender_verification_key);

}  // namespace egw::access
