// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/handshake.hpp"

#include "egw/access/aead.hpp"
#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::access {
namespace {

Key32 wrap_key(const Key32& shared_secret) {
  return hash::hmac_sha256(shared_secret, as_bytes("egw/wrap-key/v1"));
}

Bytes wrap_aad(const KeyEnvelope& e) {
  return canonical_bytes(Json{{"batch_id", e.batch_id},
                              {"kem_algorithm", e.kem_algorithm},
                              {"requester_id", e.requester_id},
                              {"type", "wrapped_batch_key"}});
}

template <typename Fn>
auto parse(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Format, std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json KeyRequest::signed_payload() const {
  return Json{{"batch_id", batch_id}, {"requester_id", requester_id}, {"timestamp_ms", timestamp_ms},
              {"type", "key_request"}};
}

Json KeyRequest::to_json() const {
  Json j = signed_payload();
  j["signature"] = to_hex(signature);
  return j;
}

KeyRequest KeyRequest::from_json(const Json& j) {
  return parse("key request", [&] {
    return KeyRequest{j.at("requester_id").get<std::string>(), j.at("batch_id").get<std::string>(),
                      j.at("timestamp_ms").get<std::int64_t>(), from_hex(j.at("signature").get<std::string>())};
  });
}

KeyRequest request_key(const SignatureInterface& sig, ByteView signing_key, const std::string& requester_id,
                       const std::string& batch_id, std::int64_t timestamp_ms) {
  KeyRequest r{requester_id, batch_id, timestamp_ms, {}};
  r.signature = sig.sign(signing_key, canonical_bytes(r.signed_payload()));
  return r;
}

bool verify_request(const SignatureInterface& sig, ByteView verification_key, const KeyRequest& request) {
  return sig.verify(verification_key, canonical_bytes(request.signed_payload()), request.signature);
}

Json KeyEnvelope::signed_payload() const {
  return Json{{"batch_id", batch_id},
              {"kem_algorithm", kem_algorithm},
              {"kem_ciphertext", to_hex(kem_ciphertext)},
              {"request_signature", to_hex(request_signature)},
              {"requester_id", requester_id},
              {"signature_algorithm", signature_algorithm},
              {"type", "key_envelope"},
              {"wrap_nonce", to_hex(wrap_nonce)},
              {"wrapped_batch_key", to_hex(wrapped_batch_key)}};
}

Json KeyEnvelope::to_json() const {
  Json j = signed_payload();
  j["envelope_signature"] = to_hex(envelope_signature);
  return j;
}

KeyEnvelope KeyEnvelope::from_json(const Json& j) {
  return parse("key envelope", [&] {
    KeyEnvelope e;
    e.batch_id = j.at("batch_id").get<std::string>();
    e.requester_id = j.at("requester_id").get<std::string>();
    e.kem_algorithm = j.at("kem_algorithm").get<std::string>();
    e.signature_algorithm = j.at("signature_algorithm").get<std::string>();
    e.kem_ciphertext = from_hex(j.at("kem_ciphertext").get<std::string>());
    e.wrap_nonce = from_hex(j.at("wrap_nonce").get<std::string>());
    e.wrapped_batch_key = from_hex(j.at("wrapped_batch_key").get<std::string>());
    e.request_signature = from_hex(j.at("request_signature").get<std::string>());
    e.envelope_signature = from_hex(j.at("envelope_signature").get<std::string>());
    return e;
  });
}

KeyEnvelope deliver_key(const CryptoSuite& suite, const KeyRequest& request, ByteView requester_verification_key,
                        ByteView requester_kem_public_key, const Key32& batch_key, ByteView sender_signing_key,
                        std::int64_t now_ms, ByteSource& rng) {
  require(verify_request(*suite.signature, requester_verification_key, request), ErrorKind::Authorization,
          "deliver_key: request signature does not verify for '" + request.requester_id + "'");
  const std::int64_t age = now_ms - request.timestamp_ms;
  require(age <= kFreshnessWindowMs && age >= -kFreshnessWindowMs, ErrorKind::Freshness,
          "deliver_key: request is " + std::to_string(age) + " ms old, window is " +
              std::to_string(kFreshnessWindowMs) + " ms");

  KeyEnvelope e;
  e.batch_id = request.batch_id;
  e.requester_id = request.requester_id;
  e.kem_algorithm = std::string(suite.kem->algorithm_id());
  e.signature_algorithm = std::string(suite.signature->algorithm_id());
  e.request_signature = request.signature;
  auto enc = suite.kem->encapsulate(requester_kem_public_key, rng);
  e.kem_ciphertext = std::move(enc.ciphertext);
  e.wrap_nonce = rng.bytes(kNonceBytes);
  e.wrapped_batch_key = seal(wrap_key(enc.shared_secret), e.wrap_nonce, wrap_aad(e), batch_key);
  e.envelope_signature = suite.signature->sign(sender_signing_key, canonical_bytes(e.signed_payload()));
  return e;
}

Key32 open_envelope(const CryptoSuite& suite, const KeyEnvelope& envelope, ByteView own_kem_secret_key,
                    ByteView sender_verification_key) {
  require(envelope.kem_algorithm == suite.kem->algorithm_id() &&
              envelope.signature_algorithm == suite.signature->algorithm_id(),
          ErrorKind::Signature, "open_envelope: envelope was made with a different suite");
  require(suite.signature->verify(sender_verification_key, canonical_bytes(envelope.signed_payload()),
                                  envelope.envelope_signature),
          ErrorKind::Signature, "open_envelope: envelope signature does not verify");
  const Key32 ss = suite.kem->decapsulate(own_kem_secret_key, envelope.kem_ciphertext);
  const Bytes key = open(wrap_key(ss), envelope.wrap_nonce, wrap_aad(envelope), envelope.wrapped_batch_key);
  require(key.size() == 32, ErrorKind::Authentication, "open_envelope: wrapped key has the wrong length");
  Key32 out{};
  std::copy(key.begin(), key.end(), out.begin());
  return out;
}

}  // namespace egw::access
