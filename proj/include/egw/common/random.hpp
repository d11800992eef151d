// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <span>

#include "egw/common/bytes.hpp"

namespace egw {

/// Source of key material and nonces.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> array() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }
};

/// Operating-system entropy (OpenSSL RAND_bytes).
class OsRandom final : public ByteSource {
 public:
  void fill(std::span<std::uint8_t> out) override;
};

/// HMAC-SHA256 DRBG (SP 800-90A construction, no reseed). Deterministic per
/// seed, which is what makes simulations and replays reproducible.
class Drbg final : public ByteSource {
 public:
  explicit Drbg(std::uint64_t seed);
  explicit Drbg(ByteView seed_material);

  void fill(std::span<std::uint8_t> out) override;

  std::uint64_t next_u64();
  /// Uniform in [0, bound) by rejection.
  std::uint64_t uniform(std::uint64_t bound);

 private:
  void update(ByteView provided);

  Digest key_{};
  Digest value_{};
};

}  // namespace egw
