// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace egw {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 32-byte digest / key.
using Digest = std::array<std::uint8_t, 32>;
using Key32 = std::array<std::uint8_t, 32>;

std::string to_hex(ByteView bytes);
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex(std::string_view hex);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
  auto v = as_bytes(s);
  return {v.begin(), v.end()};
}

void append(Bytes& out, ByteView more);
void append_u64_le(Bytes& out, std::uint64_t value);
void append_u32_le(Bytes& out, std::uint32_t value);

/// Constant-time equality for equal-length buffers.
bool ct_equal(ByteView a, ByteView b) noexcept;

}  // namespace egw

#include "egw/common/error.hpp"

namespace egw {

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex(std::string_view hex) {
  auto raw = from_hex(hex);
  require(raw.size() == N, ErrorKind::Format,
          "expected " + std::to_string(N) + " hex-encoded bytes, got " + std::to_string(raw.size()));
  std::array<std::uint8_t, N> out{};
  std::copy(raw.begin(), raw.end(), out.begin());
  return out;
}

}  // namespace egw
