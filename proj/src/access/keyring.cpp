// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/keyring.hpp"

#include "egw/common/hash.hpp"

namespace egw::access {

Key32 derive_child_key(const Key32& master, std::uint64_t batch_index) {
  Bytes msg = to_bytes("egw/child-key/v1");
  append_u64_le(msg, batch_index);
  return hash::hmac_sha256(master, msg);
}

Key32 derive_private(const Key32& master) {
  return hash::hmac_sha256(master, as_bytes("egw/derived-private/v1"));
}

KeyRing::KeyRing(const Key32& master, std::uint64_t precomputed_children)
    : master_(master), derived_(derive_private(master)) {
  for (std::uint64_t i = 0; i < precomputed_children; ++i) children_.emplace(i, derive_child_key(master_, i));
}

KeyRing KeyRing::generate(ByteSource& rng, std::uint64_t precomputed_children) {
  return KeyRing(rng.array<32>(), precomputed_children);
}

Key32 KeyRing::child(std::uint64_t batch_index) const {
  if (auto it = children_.find(batch_index); it != children_.end()) return it->second;
  return derive_child_key(master_, batch_index);
}

}  // namespace egw::access
