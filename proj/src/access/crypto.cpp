// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/crypto.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <memory>
#include <optional>

#include "egw/access/mldsa.hpp"
#include "egw/access/mlkem.hpp"
#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::access {
namespace {

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct PkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

Pkey raw_private(int type, ByteView key, ErrorKind kind) {
  Pkey p(EVP_PKEY_new_raw_private_key(type, nullptr, key.data(), key.size()));
  require(p != nullptr, kind, "openssl: bad private key");
  return p;
}

Bytes public_of(const Pkey& p) {
  Bytes out(32);
  std::size_t len = out.size();
  require(EVP_PKEY_get_raw_public_key(p.get(), out.data(), &len) == 1 && len == 32, ErrorKind::Parameter,
          "openssl: cannot read public key");
  return out;
}

std::optional<Key32> x25519(ByteView secret, ByteView peer) {
  if (secret.size() != 32 || peer.size() != 32) return std::nullopt;
  auto sk = raw_private(EVP_PKEY_X25519, secret, ErrorKind::Decapsulation);
  Pkey pk(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer.data(), peer.size()));
  if (!pk) return std::nullopt;
  std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter> ctx(EVP_PKEY_CTX_new(sk.get(), nullptr));
  Key32 out{};
  std::size_t len = out.size();
  // derive fails on an all-zero result (small-order peer)
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 || EVP_PKEY_derive_set_peer(ctx.get(), pk.get()) != 1 ||
      EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != 32)
    return std::nullopt;
  return out;
}

class X25519Kem final : public KemInterface {
 public:
  std::string_view algorithm_id() const override { return "x25519-sha256"; }
  std::size_t public_key_bytes() const override { return 32; }

  KemKeyPair keygen(ByteSource& rng) const override {
    const auto sk = rng.array<32>();
    return {public_of(raw_private(EVP_PKEY_X25519, sk, ErrorKind::Parameter)), Bytes(sk.begin(), sk.end()),
            std::string(algorithm_id())};
  }

  KemEncapsulation encapsulate(ByteView public_key, ByteSource& rng) const override {
    require(public_key.size() == 32, ErrorKind::Parameter, "x25519: public key must be 32 bytes");
    const auto esk = rng.array<32>();
    const Bytes epk = public_of(raw_private(EVP_PKEY_X25519, esk, ErrorKind::Parameter));
    const auto dh = x25519(esk, public_key);
    require(dh.has_value(), ErrorKind::Parameter, "x25519: degenerate public key");
    return {epk, combine(*dh, epk, public_key)};
  }

  Key32 decapsulate(ByteView secret_key, ByteView ciphertext) const override {
    require(secret_key.size() == 32, ErrorKind::Decapsulation, "x25519: secret key must be 32 bytes");
    require(ciphertext.size() == 32, ErrorKind::Decapsulation, "x25519: ciphertext must be 32 bytes");
    const auto dh = x25519(secret_key, ciphertext);
    require(dh.has_value(), ErrorKind::Decapsulation, "x25519: degenerate ciphertext");
    const Bytes pk = public_of(raw_private(EVP_PKEY_X25519, secret_key, ErrorKind::Decapsulation));
    return combine(*dh, ciphertext, pk);
  }

 private:
  static Key32 combine(const Key32& dh, ByteView epk, ByteView pk) {
    Bytes in = to_bytes("egw/x25519-kem/v1");
    append(in, dh);
    append(in, epk);
    append(in, pk);
    return hash::sha256(in);
  }
};

class MlKem512 final : public KemInterface {
 public:
  std::string_view algorithm_id() const override { return "ml-kem-512"; }
  std::size_t public_key_bytes() const override { return mlkem::kEncapsKeyBytes; }

  KemKeyPair keygen(ByteSource& rng) const override {
    const auto d = rng.array<32>();
    const auto z = rng.array<32>();
    auto kp = mlkem::keygen_internal(d, z);
    return {std::move(kp.ek), std::move(kp.dk), std::string(algorithm_id())};
  }

  KemEncapsulation encapsulate(ByteView public_key, ByteSource& rng) const override {
    auto e = mlkem::encaps_internal(public_key, rng.array<32>());
    return {std::move(e.ciphertext), e.shared_secret};
  }

  Key32 decapsulate(ByteView secret_key, ByteView ciphertext) const override {
    return mlkem::decaps(secret_key, ciphertext);
  }
};

class Ed25519 final : public SignatureInterface {
 public:
  std::string_view algorithm_id() const override { return "ed25519"; }
  std::size_t verification_key_bytes() const override { return 32; }

  SignatureKeyPair keygen_from_seed(const Key32& seed) const override {
    return {Bytes(seed.begin(), seed.end()), public_of(raw_private(EVP_PKEY_ED25519, seed, ErrorKind::Parameter)),
            std::string(algorithm_id())};
  }

  Bytes sign(ByteView signing_key, ByteView message) const override {
    require(signing_key.size() == 32, ErrorKind::Parameter, "ed25519: signing key must be 32 bytes");
    auto sk = raw_private(EVP_PKEY_ED25519, signing_key, ErrorKind::Parameter);
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    Bytes sig(64);
    std::size_t len = sig.size();
    require(ctx && EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, sk.get()) == 1 &&
                EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()) == 1,
            ErrorKind::Signature, "ed25519: signing failed");
    return sig;
  }

  bool verify(ByteView verification_key, ByteView message, ByteView signature) const override {
    if (verification_key.size() != 32 || signature.size() != 64) return false;
    Pkey pk(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, verification_key.data(), 32));
    if (!pk) return false;
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx(EVP_MD_CTX_new());
    return ctx && EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pk.get()) == 1 &&
           EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(), message.size()) == 1;
  }
};

class MlDsa44 final : public SignatureInterface {
 public:
  std::string_view algorithm_id() const override { return "ml-dsa-44"; }
  std::size_t verification_key_bytes() const override { return mldsa::kPublicKeyBytes; }

  SignatureKeyPair keygen_from_seed(const Key32& seed) const override {
    auto kp = mldsa::keygen_internal(seed);
    return {std::move(kp.sk), std::move(kp.pk), std::string(algorithm_id())};
  }

  Bytes sign(ByteView signing_key, ByteView message) const override {
    return mldsa::sign(signing_key, message, Key32{});
  }

  bool verify(ByteView verification_key, ByteView message, ByteView signature) const override {
    return mldsa::verify(verification_key, message, signature);
  }
};

}  // namespace

std::shared_ptr<const KemInterface> x25519_kem() { return std::make_shared<X25519Kem>(); }
std::shared_ptr<const KemInterface> ml_kem_512() { return std::make_shared<MlKem512>(); }
std::shared_ptr<const SignatureInterface> ed25519_signature() { return std::make_shared<Ed25519>(); }
std::shared_ptr<const SignatureInterface> ml_dsa_44() { return std::make_shared<MlDsa44>(); }

CryptoSuite make_suite(std::string_view name) {
  if (name == "pq") return {ml_kem_512(), ml_dsa_44()};
  if (name == "classical") return {x25519_kem(), ed25519_signature()};
  fail(ErrorKind::Config, "unknown crypto suite '" + std::string(name) + "' (expected pq or classical)");
}

}  // namespace egw::access
