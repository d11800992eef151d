// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>

#include "egw/common/bytes.hpp"

// Thin wrappers over OpenSSL's EVP interface. SHA-256 is the repository-wide
// 256-bit hash; SHAKE and SHA3 back the lattice schemes.
namespace egw::hash {

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);

Bytes shake128(ByteView data, std::size_t out_len);
Bytes shake256(ByteView data, std::size_t out_len);
Digest sha3_256(ByteView data);
std::array<std::uint8_t, 64> sha3_512(ByteView data);

std::uint32_t crc32(ByteView data);

}  // namespace egw::hash
