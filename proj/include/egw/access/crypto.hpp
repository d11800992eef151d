// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "egw/common/bytes.hpp"
#include "egw/common/random.hpp"

namespace egw::access {

struct KemKeyPair {
  Bytes public_key;
  Bytes secret_key;
  std::string algorithm_id;
};

struct KemEncapsulation {
  Bytes ciphertext;
  Key32 shared_secret;
};

class KemInterface {
 public:
  virtual ~KemInterface() = default;
  virtual std::string_view algorithm_id() const = 0;
  virtual std::size_t public_key_bytes() const = 0;
  virtual KemKeyPair keygen(ByteSource& rng) const = 0;
  virtual KemEncapsulation encapsulate(ByteView public_key, ByteSource& rng) const = 0;
  /// Throws Decapsulation on malformed input.
  virtual Key32 decapsulate(ByteView secret_key, ByteView ciphertext) const = 0;
};

struct SignatureKeyPair {
  Bytes signing_key;
  Bytes verification_key;
  std::string algorithm_id;
};

class SignatureInterface {
 public:
  virtual ~SignatureInterface() = default;
  virtual std::string_view algorithm_id() const = 0;
  virtual std::size_t verification_key_bytes() const = 0;
  /// Deterministic from a 32-byte seed.
  virtual SignatureKeyPair keygen_from_seed(const Key32& seed) const = 0;
  SignatureKeyPair keygen(ByteSource& rng) const { return keygen_from_seed(rng.array<32>()); }
  virtual Bytes sign(ByteView signing_key, ByteView message) const = 0;
  virtual bool verify(ByteView verification_key, ByteView message, ByteView signature) const = 0;
};

/// X25519 with an ephemeral sender key; secret = SHA-256(label | dh | epk | pk).
std::shared_ptr<const KemInterface> x25519_kem();
/// ML-KEM-512.
std::shared_ptr<const KemInterface> ml_kem_512();
std::shared_ptr<const SignatureInterface> ed25519_signature();
/// ML-DSA-44, deterministic signing, empty context.
std::shared_ptr<const SignatureInterface> ml_dsa_44();

struct CryptoSuite {
  std::shared_ptr<const KemInterface> kem;
  std::shared_ptr<const SignatureInterface> signature;
};

/// "pq" (ml-kem-512 + ml-dsa-44) or "classical" (x25519-sha256 + ed25519).
CryptoSuite make_suite(std::string_view name);

}  // namespace egw::access
