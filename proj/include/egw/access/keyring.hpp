// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"
#include "egw/common/random.hpp"

namespace egw::access {

/// HMAC-SHA256(master, "egw/child-key/v1" | u64le(index)).
Key32 derive_child_key(const Key32& master, std::uint64_t batch_index);

/// HMAC-SHA256(master, "egw/derived-private/v1"). Used only to seed the
/// owner's signing key.
Key32 derive_private(const Key32& master);

/// Immutable after construction.
class KeyRing {
 public:
  explicit KeyRing(const Key32& master, std::uint64_t precomputed_children = 0);
  static KeyRing generate(ByteSource& rng, std::uint64_t precomputed_children = 0);

  const Key32& master_secret() const { return master_; }
  const Key32& derived_private() const { return derived_; }
  const std::map<std::uint64_t, Key32>& child_keys() const { return children_; }
  /// From the precomputed map when present, derived otherwise.
  Key32 child(std::uint64_t batch_index) const;

 private:
  Key32 master_;
  Key32 derived_;
  std::map<std::uint64_t, Key32> children_;
};

}  // namespace egw::access
