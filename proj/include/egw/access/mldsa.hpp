// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include "egw/common/bytes.hpp"

/// ML-DSA-44 (FIPS 204), pure variant with an empty context by default.
namespace egw::access::mldsa {

inline constexpr std::size_t kPublicKeyBytes = 1312;
inline constexpr std::size_t kSecretKeyBytes = 2560;
inline constexpr std::size_t kSignatureBytes = 2420;

struct KeyPair {
  Bytes pk;
  Bytes sk;
};

KeyPair keygen_internal(const Key32& xi);

/// `rnd` all zero gives the deterministic variant.
Bytes sign(ByteView sk, ByteView message, const Key32& rnd, ByteView context = {});

/// False on any malformed input; never throws for bad signatures.
bool verify(ByteView pk, ByteView message, ByteView signature, ByteView context = {});

}  // namespace egw::access::mldsa
