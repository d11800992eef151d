// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/mlkem.hpp"

#include <algorithm>

#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::access::mlkem {
namespace {

constexpr int kN = 256;
constexpr int kQ = 3329;
constexpr int kK = 2;
constexpr int kEta1 = 3;
constexpr int kEta2 = 2;
constexpr int kDu = 10;
constexpr int kDv = 4;
constexpr std::size_t kPolyBytes = 384;

using Poly = std::array<std::int32_t, kN>;
using PolyVec = std::array<Poly, kK>;

constexpr std::int32_t mod_q(std::int64_t v) {
  auto r = static_cast<std::int32_t>(v % kQ);
  return r < 0 ? r + kQ : r;
}

constexpr std::int32_t pow_mod(std::int64_t base, unsigned e) {
  std::int64_t r = 1;
  for (; e; e >>= 1, base = base * base % kQ)
    if (e & 1) r = r * base % kQ;
  return static_cast<std::int32_t>(r);
}

constexpr unsigned bitrev7(unsigned x) {
  unsigned r = 0;
  for (int i = 0; i < 7; ++i) r |= ((x >> i) & 1u) << (6 - i);
  return r;
}

struct Tables {
  std::array<std::int32_t, 128> zetas{};
  std::array<std::int32_t, 128> gammas{};
  constexpr Tables() {
    for (unsigned i = 0; i < 128; ++i) {
      zetas[i] = pow_mod(17, bitrev7(i));
      gammas[i] = pow_mod(17, 2 * bitrev7(i) + 1);
    }
  }
};
constexpr Tables kTables;

void ntt(Poly& f) {
  unsigned i = 1;
  for (int len = 128; len >= 2; len /= 2)
    for (int start = 0; start < kN; start += 2 * len) {
      const std::int64_t zeta = kTables.zetas[i++];
      for (int j = start; j < start + len; ++j) {
        const auto t = mod_q(zeta * f[j + len]);
        f[j + len] = mod_q(f[j] - t);
        f[j] = mod_q(f[j] + t);
      }
    }
}

void inv_ntt(Poly& f) {
  int i = 127;
  for (int len = 2; len <= 128; len *= 2)
    for (int start = 0; start < kN; start += 2 * len) {
      const std::int64_t zeta = kTables.zetas[static_cast<std::size_t>(i--)];
      for (int j = start; j < start + len; ++j) {
        const auto t = f[j];
        f[j] = mod_q(t + f[j + len]);
        f[j + len] = mod_q(zeta * (f[j + len] - t));
      }
    }
  for (auto& v : f) v = mod_q(std::int64_t{v} * 3303);
}

Poly multiply_ntt(const Poly& f, const Poly& g) {
  Poly h{};
  for (int i = 0; i < 128; ++i) {
    const std::int64_t a0 = f[2 * i], a1 = f[2 * i + 1], b0 = g[2 * i], b1 = g[2 * i + 1];
    h[2 * i] = mod_q(a0 * b0 + mod_q(a1 * b1) * std::int64_t{kTables.gammas[static_cast<std::size_t>(i)]});
    h[2 * i + 1] = mod_q(a0 * b1 + a1 * b0);
  }
  return h;
}

void add_to(Poly& a, const Poly& b) {
  for (int i = 0; i < kN; ++i) a[i] = mod_q(a[i] + b[i]);
}

// Rejection sampling from a SHAKE128 stream; longer squeezes share a prefix.
Poly sample_ntt(const Key32& rho, std::uint8_t j, std::uint8_t i) {
  Bytes seed(rho.begin(), rho.end());
  seed.push_back(j);
  seed.push_back(i);
  for (std::size_t len = 168 * 4;; len *= 2) {
    const Bytes s = hash::shake128(seed, len);
    Poly a{};
    int n = 0;
    for (std::size_t p = 0; p + 3 <= s.size() && n < kN; p += 3) {
      const int d1 = s[p] + 256 * (s[p + 1] & 0x0f);
      const int d2 = (s[p + 1] >> 4) + 16 * s[p + 2];
      if (d1 < kQ) a[static_cast<std::size_t>(n++)] = d1;
      if (d2 < kQ && n < kN) a[static_cast<std::size_t>(n++)] = d2;
    }
    if (n == kN) return a;
  }
}

Poly sample_cbd(ByteView b, int eta) {
  auto bit = [&](int k) { return (b[static_cast<std::size_t>(k / 8)] >> (k % 8)) & 1; };
  Poly f{};
  for (int i = 0; i < kN; ++i) {
    int x = 0, y = 0;
    for (int j = 0; j < eta; ++j) {
      x += bit(2 * i * eta + j);
      y += bit(2 * i * eta + eta + j);
    }
    f[static_cast<std::size_t>(i)] = mod_q(x - y);
  }
  return f;
}

Poly prf_cbd(ByteView s, std::uint8_t nonce, int eta) {
  Bytes in(s.begin(), s.end());
  in.push_back(nonce);
  return sample_cbd(hash::shake256(in, static_cast<std::size_t>(64 * eta)), eta);
}

void byte_encode(const Poly& f, int d, Bytes& out) {
  const std::size_t base = out.size();
  out.resize(base + static_cast<std::size_t>(32 * d), 0);
  std::size_t bit = 0;
  for (auto v : f)
    for (int k = 0; k < d; ++k, ++bit)
      out[base + bit / 8] |= static_cast<std::uint8_t>(((v >> k) & 1) << (bit % 8));
}

Poly byte_decode(ByteView b, int d) {
  Poly f{};
  std::size_t bit = 0;
  for (auto& v : f) {
    std::int32_t x = 0;
    for (int k = 0; k < d; ++k, ++bit) x |= ((b[bit / 8] >> (bit % 8)) & 1) << k;
    v = d == 12 ? x % kQ : x;
  }
  return f;
}

std::int32_t compress(std::int32_t x, int d) {
  const std::int64_t num = (std::int64_t{x} << (d + 1)) + kQ;
  return static_cast<std::int32_t>((num / (2 * kQ)) & ((1 << d) - 1));
}

std::int32_t decompress(std::int32_t y, int d) {
  return static_cast<std::int32_t>((std::int64_t{y} * kQ + (1 << (d - 1))) >> d);
}

Poly compressed(const Poly& f, int d) {
  Poly r{};
  for (int i = 0; i < kN; ++i) r[i] = compress(f[i], d);
  return r;
}

Poly decompressed(const Poly& f, int d) {
  Poly r{};
  for (int i = 0; i < kN; ++i) r[i] = decompress(f[i], d);
  return r;
}

using Matrix = std::array<PolyVec, kK>;

Matrix expand_a(const Key32& rho) {
  Matrix a{};
  for (int i = 0; i < kK; ++i)
    for (int j = 0; j < kK; ++j)
      a[i][j] = sample_ntt(rho, static_cast<std::uint8_t>(j), static_cast<std::uint8_t>(i));
  return a;
}

std::pair<Key32, Key32> g_split(ByteView in) {
  const auto h = hash::sha3_512(in);
  std::pair<Key32, Key32> out;
  std::copy_n(h.begin(), 32, out.first.begin());
  std::copy_n(h.begin() + 32, 32, out.second.begin());
  return out;
}

Bytes pke_encrypt(ByteView ek, const Key32& m, const Key32& r) {
  PolyVec t{};
  for (int i = 0; i < kK; ++i) t[i] = byte_decode(ek.subspan(kPolyBytes * i, kPolyBytes), 12);
  Key32 rho{};
  std::copy_n(ek.begin() + kPolyBytes * kK, 32, rho.begin());
  const auto a = expand_a(rho);

  std::uint8_t n = 0;
  PolyVec y{}, e1{};
  for (auto& p : y) p = prf_cbd(r, n++, kEta1);
  for (auto& p : e1) p = prf_cbd(r, n++, kEta2);
  const Poly e2 = prf_cbd(r, n, kEta2);
  for (auto& p : y) ntt(p);

  PolyVec u{};
  for (int i = 0; i < kK; ++i) {
    Poly acc{};
    for (int j = 0; j < kK; ++j) add_to(acc, multiply_ntt(a[j][i], y[j]));
    inv_ntt(acc);
    add_to(acc, e1[i]);
    u[i] = acc;
  }
  Poly v{};
  for (int j = 0; j < kK; ++j) add_to(v, multiply_ntt(t[j], y[j]));
  inv_ntt(v);
  add_to(v, e2);
  add_to(v, decompressed(byte_decode(m, 1), 1));

  Bytes c;
  c.reserve(kCiphertextBytes);
  for (const auto& p : u) byte_encode(compressed(p, kDu), kDu, c);
  byte_encode(compressed(v, kDv), kDv, c);
  return c;
}

Key32 pke_decrypt(ByteView dk_pke, ByteView c) {
  constexpr std::size_t kUBytes = 32 * kDu;
  Poly w = decompressed(byte_decode(c.subspan(kUBytes * kK, 32 * kDv), kDv), kDv);
  Poly acc{};
  for (int i = 0; i < kK; ++i) {
    Poly u = decompressed(byte_decode(c.subspan(kUBytes * i, kUBytes), kDu), kDu);
    ntt(u);
    add_to(acc, multiply_ntt(byte_decode(dk_pke.subspan(kPolyBytes * i, kPolyBytes), 12), u));
  }
  inv_ntt(acc);
  for (int i = 0; i < kN; ++i) w[i] = mod_q(w[i] - acc[i]);
  Bytes m;
  byte_encode(compressed(w, 1), 1, m);
  Key32 out{};
  std::copy_n(m.begin(), 32, out.begin());
  return out;
}

}  // namespace

bool ek_valid(ByteView ek) {
  if (ek.size() != kEncapsKeyBytes) return false;
  for (int i = 0; i < kK; ++i) {
    const auto chunk = ek.subspan(kPolyBytes * i, kPolyBytes);
    Bytes again;
    byte_encode(byte_decode(chunk, 12), 12, again);
    if (!std::equal(again.begin(), again.end(), chunk.begin())) return false;
  }
  return true;
}

KeyPair keygen_internal(const Key32& d, const Key32& z) {
  Bytes seed(d.begin(), d.end());
  seed.push_back(static_cast<std::uint8_t>(kK));
  const auto [rho, sigma] = g_split(seed);
  const auto a = expand_a(rho);

  std::uint8_t n = 0;
  PolyVec s{}, e{};
  for (auto& p : s) p = prf_cbd(sigma, n++, kEta1);
  for (auto& p : e) p = prf_cbd(sigma, n++, kEta1);
  for (auto& p : s) ntt(p);
  for (auto& p : e) ntt(p);

  KeyPair kp;
  for (int i = 0; i < kK; ++i) {
    Poly t = e[i];
    for (int j = 0; j < kK; ++j) add_to(t, multiply_ntt(a[i][j], s[j]));
    byte_encode(t, 12, kp.ek);
  }
  append(kp.ek, rho);
  for (const auto& p : s) byte_encode(p, 12, kp.dk);
  append(kp.dk, kp.ek);
  append(kp.dk, hash::sha3_256(kp.ek));
  append(kp.dk, z);
  return kp;
}

Encapsulation encaps_internal(ByteView ek, const Key32& m) {
  require(ek_valid(ek), ErrorKind::Parameter, "ml-kem: malformed encapsulation key");
  Bytes in(m.begin(), m.end());
  append(in, hash::sha3_256(ek));
  const auto [key, r] = g_split(in);
  return {key, pke_encrypt(ek, m, r)};
}

Key32 decaps(ByteView dk, ByteView c) {
  require(dk.size() == kDecapsKeyBytes, ErrorKind::Decapsulation, "ml-kem: decapsulation key has the wrong length");
  require(c.size() == kCiphertextBytes, ErrorKind::Decapsulation, "ml-kem: ciphertext has the wrong length");
  const auto dk_pke = dk.subspan(0, kPolyBytes * kK);
  const auto ek = dk.subspan(kPolyBytes * kK, kEncapsKeyBytes);
  const auto h = dk.subspan(kPolyBytes * kK + kEncapsKeyBytes, 32);
  const auto z = dk.subspan(kPolyBytes * kK + kEncapsKeyBytes + 32, 32);
  const auto h_ek = hash::sha3_256(ek);
  require(ct_equal(h, h_ek), ErrorKind::Decapsulation, "ml-kem: decapsulation key hash check failed");

  const Key32 m = pke_decrypt(dk_pke, c);
  Bytes in(m.begin(), m.end());
  append(in, h);
  const auto [key, r] = g_split(in);
  Bytes zc(z.begin(), z.end());
  append(zc, c);
  const Bytes reject = hash::shake256(zc, 32);
  const Bytes again = pke_encrypt(ek, m, r);
  if (ct_equal(again, c)) return key;
  Key32 out{};
  std::copy_n(reject.begin(), 32, out.begin());
  return out;
}

}  // namespace egw::access::mlkem
