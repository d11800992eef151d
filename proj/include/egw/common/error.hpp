// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace egw {

enum class ErrorKind {
  Parameter,
  EmptyInput,
  Structure,
  Shape,
  State,
  Training,
  Format,
  Checksum,
  ConfigMismatch,
  Data,
  Authorization,
  Freshness,
  Signature,
  Decapsulation,
  Authentication,
  Ordering,
  ForkAttempt,
  Tamper,
  Duplicate,
  NotFound,
  Integrity,
  InsufficientBalance,
  Transition,
  Storage,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the whole stack; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace egw
