// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "egw/common/error.hpp"

namespace egw::access {
namespace {

BenchRow summarise(std::string op, std::string_view algorithm, std::vector<double> ms) {
  std::sort(ms.begin(), ms.end());
  auto rank = [&](double p) {
    const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(ms.size())));
    return ms[std::max<std::size_t>(k, 1) - 1];
  };
  BenchRow r;
  r.operation = std::move(op);
  r.algorithm = std::string(algorithm);
  r.iterations = static_cast<int>(ms.size());
  r.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  r.p50_ms = rank(0.50);
  r.p95_ms = rank(0.95);
  r.min_ms = ms.front();
  r.max_ms = ms.back();
  return r;
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

BenchReport bench_crypto(const CryptoSuite& suite, int iterations, ByteSource& rng) {
  require(iterations >= 1, ErrorKind::Parameter, "bench_crypto: iterations must be >= 1");
  const auto n = static_cast<std::size_t>(iterations);
  std::vector<double> kg(n), enc(n), dec(n), skg(n), sg(n), vf(n);
  const Bytes message = rng.bytes(256);
  for (std::size_t i = 0; i < n; ++i) {
    KemKeyPair kp;
    kg[i] = time_ms([&] { kp = suite.kem->keygen(rng); });
    KemEncapsulation e;
    enc[i] = time_ms([&] { e = suite.kem->encapsulate(kp.public_key, rng); });
    Key32 ss{};
    dec[i] = time_ms([&] { ss = suite.kem->decapsulate(kp.secret_key, e.ciphertext); });
    require(ss == e.shared_secret, ErrorKind::Decapsulation, "bench_crypto: shared secrets differ");

    SignatureKeyPair sk;
    skg[i] = time_ms([&] { sk = suite.signature->keygen(rng); });
    Bytes sig;
    sg[i] = time_ms([&] { sig = suite.signature->sign(sk.signing_key, message); });
    bool ok = false;
    vf[i] = time_ms([&] { ok = suite.signature->verify(sk.verification_key, message, sig); });
    require(ok, ErrorKind::Signature, "bench_crypto: signature did not verify");
  }
  const auto kem = suite.kem->algorithm_id();
  const auto sig = suite.signature->algorithm_id();
  return {{summarise("kem_keygen", kem, kg), summarise("encapsulate", kem, enc), summarise("decapsulate", kem, dec),
           summarise("sig_keygen", sig, skg), summarise("sign", sig, sg), summarise("verify", sig, vf)}};
}

Json BenchReport::to_json() const {
  Json out = Json::array();
  for (const auto& r : rows)
    out.push_back(Json{{"algorithm", r.algorithm}, {"iterations", r.iterations}, {"max_ms", r.max_ms},
                       {"mean_ms", r.mean_ms}, {"min_ms", r.min_ms}, {"operation", r.operation},
                       {"p50_ms", r.p50_ms}, {"p95_ms", r.p95_ms}, {"unit", "ms"}});
  return Json{{"rows", out}};
}

std::string BenchReport::to_text() const {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-14s %6s %10s %10s %10s\n", "operation", "algorithm", "n", "mean_ms",
                "p50_ms", "p95_ms");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-12s %-14s %6d %10.4f %10.4f %10.4f\n", r.operation.c_str(),
                  r.algorithm.c_str(), r.iterations, r.mean_ms, r.p50_ms, r.p95_ms);
    out += line;
  }
  return out;
}

}  // namespace egw::access
