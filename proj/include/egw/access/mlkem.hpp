// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <cstdint>

#include "egw/common/bytes.hpp"

/// ML-KEM-512 (FIPS 203), k = 2.
namespace egw::access::mlkem {

inline constexpr std::size_t kEncapsKeyBytes = 800;
inline constexpr std::size_t kDecapsKeyBytes = 1632;
inline constexpr std::size_t kCiphertextBytes = 768;
inline constexpr std::size_t kSharedSecretBytes = 32;

struct KeyPair {
  Bytes ek;  // encapsulation key
  Bytes dk;  // decapsulation key
};

struct Encapsulation {
  Key32 shared_secret;
  Bytes ciphertext;
};

/// Deterministic internals, exposed for known-answer tests.
KeyPair keygen_internal(const Key32& d, const Key32& z);
Encapsulation encaps_internal(ByteView ek, const Key32& m);

/// Implicit rejection: a well-formed but wrong ciphertext yields a
/// pseudorandom secret, not an error. Malformed lengths or a dk whose
/// embedded hash does not match throw Decapsulation.
Key32 decaps(ByteView dk, ByteView ciphertext);

/// Type and modulus check on an encapsulation key.
bool ek_valid(ByteView ek);

}  // namespace egw::access::mlkem
