// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <string>

#include <json.hpp>

#include "egw/common/bytes.hpp"

namespace egw {

using Json = nlohmann::json;

/// Canonical form used for everything that is hashed or signed: UTF-8,
/// lexicographically sorted keys, no insignificant whitespace, integers in
/// decimal, byte strings as lowercase hex.
std::string canonical_json(const Json& value);

inline Bytes canonical_bytes(const Json& value) { return to_bytes(canonical_json(value)); }

Digest canonical_digest(const Json& value);

}  // namespace egw
