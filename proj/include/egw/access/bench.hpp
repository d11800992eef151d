// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#pragma once

#include <string>
#include <vector>

#include "egw/access/crypto.hpp"
#include "egw/common/canonical.hpp"

namespace egw::access {

struct BenchRow {
  std::string operation;  // kem_keygen, encapsulate, decapsulate, sig_keygen, sign, verify
  std::string algorithm;
  int iterations = 0;
  double mean_ms = 0;
  double p50_ms = 0;  // nearest rank
  double p95_ms = 0;
  double min_ms = 0;
  double max_ms = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;

  Json to_json() const;
  std::string to_text() const;
};

/// Wall-clock latency of each primitive, timed one call at a time.
BenchReport bench_crypto(const CryptoSuite& suite, int iterations, ByteSource& rng);

}  // namespace egw::access
