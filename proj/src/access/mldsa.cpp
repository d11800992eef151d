// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include "egw/access/mldsa.hpp"

#include <algorithm>
#include <optional>

#include "egw/common/error.hpp"
#include "egw/common/hash.hpp"

namespace egw::access::mldsa {
namespace {

constexpr int kN = 256;
constexpr std::int32_t kQ = 8380417;
constexpr int kD = 13;
constexpr int kTau = 39;
constexpr int kK = 4;
constexpr int kL = 4;
constexpr int kEta = 2;
constexpr std::int32_t kGamma1 = 1 << 17;
constexpr std::int32_t kGamma2 = (kQ - 1) / 88;
constexpr std::int32_t kBeta = kTau * kEta;
constexpr int kOmega = 80;
constexpr std::size_t kCTildeBytes = 32;

using Poly = std::array<std::int32_t, kN>;
using VecL = std::array<Poly, kL>;
using VecK = std::array<Poly, kK>;
using Matrix = std::array<VecL, kK>;

constexpr std::int32_t mod_q(std::int64_t v) {
  auto r = static_cast<std::int32_t>(v % kQ);
  return r < 0 ? r + kQ : r;
}

// r mod± a, in (-a/2, a/2]
constexpr std::int32_t mod_pm(std::int32_t r, std::int32_t a) {
  std::int32_t x = r % a;
  if (x < 0) x += a;
  if (x > a / 2) x -= a;
  return x;
}

constexpr std::int32_t centered(std::int32_t r) { return mod_pm(mod_q(r), kQ); }

struct Zetas {
  std::array<std::int32_t, 256> z{};
  constexpr Zetas() {
    for (unsigned k = 0; k < 256; ++k) {
      unsigned rev = 0;
      for (int i = 0; i < 8; ++i) rev |= ((k >> i) & 1u) << (7 - i);
      std::int64_t r = 1, b = 1753;
      for (unsigned e = rev; e; e >>= 1, b = b * b % kQ)
        if (e & 1) r = r * b % kQ;
      z[k] = static_cast<std::int32_t>(r);
    }
  }
};
constexpr Zetas kZetas;

void ntt(Poly& w) {
  int m = 0;
  for (int len = 128; len >= 1; len /= 2)
    for (int start = 0; start < kN; start += 2 * len) {
      const std::int64_t z = kZetas.z[static_cast<std::size_t>(++m)];
      for (int j = start; j < start + len; ++j) {
        const auto t = mod_q(z * w[j + len]);
        w[j + len] = mod_q(w[j] - t);
        w[j] = mod_q(w[j] + t);
      }
    }
}

void inv_ntt(Poly& w) {
  int m = 256;
  for (int len = 1; len < kN; len *= 2)
    for (int start = 0; start < kN; start += 2 * len) {
      const std::int64_t z = kQ - kZetas.z[static_cast<std::size_t>(--m)];
      for (int j = start; j < start + len; ++j) {
        const auto t = w[j];
        w[j] = mod_q(t + w[j + len]);
        w[j + len] = mod_q(z * (t - w[j + len]));
      }
    }
  for (auto& v : w) v = mod_q(std::int64_t{v} * 8347681);
}

Poly pointwise(const Poly& a, const Poly& b) {
  Poly r{};
  for (int i = 0; i < kN; ++i) r[i] = mod_q(std::int64_t{a[i]} * b[i]);
  return r;
}

void add_to(Poly& a, const Poly& b) {
  for (int i = 0; i < kN; ++i) a[i] = mod_q(std::int64_t{a[i]} + b[i]);
}

Poly sub(const Poly& a, const Poly& b) {
  Poly r{};
  for (int i = 0; i < kN; ++i) r[i] = mod_q(std::int64_t{a[i]} - b[i]);
  return r;
}

Poly ntt_of(Poly p) {
  ntt(p);
  return p;
}

Poly inv_of(Poly p) {
  inv_ntt(p);
  return p;
}

std::int32_t inf_norm(const Poly& p) {
  std::int32_t m = 0;
  for (auto v : p) m = std::max(m, std::abs(centered(v)));
  return m;
}

Bytes h_shake(ByteView in, std::size_t len) { return hash::shake256(in, len); }

Bytes concat(std::initializer_list<ByteView> parts) {
  Bytes out;
  for (auto p : parts) append(out, p);
  return out;
}

// ---------------------------------------------------------------- sampling

Poly rej_ntt_poly(ByteView seed) {
  for (std::size_t len = 168 * 5;; len *= 2) {
    const Bytes s = hash::shake128(seed, len);
    Poly a{};
    int n = 0;
    for (std::size_t p = 0; p + 3 <= s.size() && n < kN; p += 3) {
      const std::int32_t z = s[p] | (s[p + 1] << 8) | ((s[p + 2] & 0x7f) << 16);
      if (z < kQ) a[static_cast<std::size_t>(n++)] = z;
    }
    if (n == kN) return a;
  }
}

Poly rej_bounded_poly(ByteView seed) {
  for (std::size_t len = 136 * 2;; len *= 2) {
    const Bytes s = h_shake(seed, len);
    Poly a{};
    int n = 0;
    auto take = [&](int b) {
      if (b < 15 && n < kN) a[static_cast<std::size_t>(n++)] = mod_q(2 - b % 5);
    };
    for (std::size_t p = 0; p < s.size() && n < kN; ++p) {
      take(s[p] & 0x0f);
      take(s[p] >> 4);
    }
    if (n == kN) return a;
  }
}

Matrix expand_a(ByteView rho) {
  Matrix a{};
  for (int r = 0; r < kK; ++r)
    for (int s = 0; s < kL; ++s) {
      Bytes seed(rho.begin(), rho.end());
      seed.push_back(static_cast<std::uint8_t>(s));
      seed.push_back(static_cast<std::uint8_t>(r));
      a[r][s] = rej_ntt_poly(seed);
    }
  return a;
}

std::pair<VecL, VecK> expand_s(ByteView rho_prime) {
  VecL s1{};
  VecK s2{};
  auto seed = [&](int r) {
    Bytes out(rho_prime.begin(), rho_prime.end());
    out.push_back(static_cast<std::uint8_t>(r & 0xff));
    out.push_back(static_cast<std::uint8_t>(r >> 8));
    return out;
  };
  for (int r = 0; r < kL; ++r) s1[r] = rej_bounded_poly(seed(r));
  for (int r = 0; r < kK; ++r) s2[r] = rej_bounded_poly(seed(r + kL));
  return {s1, s2};
}

// ---------------------------------------------------------------- bit packing

void pack_bits(Bytes& out, const Poly& coeffs, int bits) {
  const std::size_t base = out.size();
  out.resize(base + static_cast<std::size_t>(32 * bits), 0);
  std::size_t bit = 0;
  for (auto v : coeffs)
    for (int k = 0; k < bits; ++k, ++bit)
      out[base + bit / 8] |= static_cast<std::uint8_t>(((static_cast<std::uint32_t>(v) >> k) & 1u) << (bit % 8));
}

Poly unpack_bits(ByteView b, int bits) {
  Poly f{};
  std::size_t bit = 0;
  for (auto& v : f) {
    std::uint32_t x = 0;
    for (int k = 0; k < bits; ++k, ++bit) x |= static_cast<std::uint32_t>((b[bit / 8] >> (bit % 8)) & 1) << k;
    v = static_cast<std::int32_t>(x);
  }
  return f;
}

// BitPack(w, a, b): stores b - w with bitlen(a + b) bits.
void pack_signed(Bytes& out, const Poly& w, std::int32_t b, int bits) {
  Poly t{};
  for (int i = 0; i < kN; ++i) t[i] = b - centered(w[i]);
  pack_bits(out, t, bits);
}

Poly unpack_signed(ByteView in, std::int32_t b, int bits) {
  Poly t = unpack_bits(in, bits);
  for (auto& v : t) v = mod_q(b - v);
  return t;
}

constexpr int kT1Bits = 10;
constexpr int kEtaBits = 3;
constexpr int kT0Bits = 13;
constexpr int kZBits = 18;
constexpr int kW1Bits = 6;

// ---------------------------------------------------------------- rounding

std::pair<std::int32_t, std::int32_t> power2round(std::int32_t r) {
  const auto rp = mod_q(r);
  const auto r0 = mod_pm(rp, 1 << kD);
  return {(rp - r0) >> kD, r0};
}

std::pair<std::int32_t, std::int32_t> decompose(std::int32_t r) {
  const auto rp = mod_q(r);
  auto r0 = mod_pm(rp, 2 * kGamma2);
  if (rp - r0 == kQ - 1) return {0, r0 - 1};
  return {(rp - r0) / (2 * kGamma2), r0};
}

std::int32_t high_bits(std::int32_t r) { return decompose(r).first; }
std::int32_t low_bits(std::int32_t r) { return decompose(r).second; }

std::int32_t use_hint(bool h, std::int32_t r) {
  constexpr std::int32_t m = (kQ - 1) / (2 * kGamma2);
  const auto [r1, r0] = decompose(r);
  if (!h) return r1;
  return r0 > 0 ? (r1 + 1) % m : (r1 - 1 + m) % m;
}

Bytes w1_encode(const VecK& w1) {
  Bytes out;
  for (const auto& p : w1) pack_bits(out, p, kW1Bits);
  return out;
}

Poly sample_in_ball(ByteView seed) {
  for (std::size_t len = 136;; len *= 2) {
    const Bytes s = h_shake(seed, len);
    Poly c{};
    std::size_t pos = 8;
    bool ok = true;
    for (int i = kN - kTau; i < kN && ok; ++i) {
      std::size_t j = 0;
      do {
        if (pos >= s.size()) {
          ok = false;
          break;
        }
        j = s[pos++];
      } while (j > static_cast<std::size_t>(i));
      if (!ok) break;
      const int hbit = i + kTau - kN;
      c[static_cast<std::size_t>(i)] = c[j];
      c[j] = ((s[static_cast<std::size_t>(hbit / 8)] >> (hbit % 8)) & 1) ? kQ - 1 : 1;
    }
    if (ok) return c;
  }
}

struct SecretKey {
  Bytes rho, key, tr;
  VecL s1;
  VecK s2, t0;
};

SecretKey decode_sk(ByteView sk) {
  require(sk.size() == kSecretKeyBytes, ErrorKind::Parameter, "ml-dsa: secret key has the wrong length");
  SecretKey out;
  out.rho.assign(sk.begin(), sk.begin() + 32);
  out.key.assign(sk.begin() + 32, sk.begin() + 64);
  out.tr.assign(sk.begin() + 64, sk.begin() + 128);
  std::size_t p = 128;
  for (auto& v : out.s1) {
    v = unpack_signed(sk.subspan(p, 32 * kEtaBits), kEta, kEtaBits);
    p += 32 * kEtaBits;
  }
  for (auto& v : out.s2) {
    v = unpack_signed(sk.subspan(p, 32 * kEtaBits), kEta, kEtaBits);
    p += 32 * kEtaBits;
  }
  for (auto& v : out.t0) {
    v = unpack_signed(sk.subspan(p, 32 * kT0Bits), 1 << (kD - 1), kT0Bits);
    p += 32 * kT0Bits;
  }
  return out;
}

std::optional<VecK> hint_unpack(ByteView y) {
  VecK h{};
  std::size_t index = 0;
  for (int i = 0; i < kK; ++i) {
    const std::size_t end = y[static_cast<std::size_t>(kOmega + i)];
    if (end < index || end > static_cast<std::size_t>(kOmega)) return std::nullopt;
    const std::size_t first = index;
    for (; index < end; ++index) {
      if (index > first && y[index - 1] >= y[index]) return std::nullopt;
      h[i][y[index]] = 1;
    }
  }
  for (std::size_t i = index; i < static_cast<std::size_t>(kOmega); ++i)
    if (y[i] != 0) return std::nullopt;
  return h;
}

Bytes message_prime(ByteView message, ByteView context) {
  require(context.size() <= 255, ErrorKind::Parameter, "ml-dsa: context longer than 255 bytes");
  Bytes out{0, static_cast<std::uint8_t>(context.size())};
  append(out, context);
  append(out, message);
  return out;
}

}  // namespace

KeyPair keygen_internal(const Key32& xi) {
  const Bytes seed = concat({xi, Bytes{kK, kL}});
  const Bytes expanded = h_shake(seed, 128);
  const ByteView rho(expanded.data(), 32), rho_prime(expanded.data() + 32, 64), key(expanded.data() + 96, 32);

  const auto a = expand_a(rho);
  const auto [s1, s2] = expand_s(rho_prime);
  VecL s1_hat{};
  for (int i = 0; i < kL; ++i) s1_hat[i] = ntt_of(s1[i]);

  KeyPair kp;
  append(kp.pk, rho);
  VecK t0{};
  for (int r = 0; r < kK; ++r) {
    Poly acc{};
    for (int s = 0; s < kL; ++s) add_to(acc, pointwise(a[r][s], s1_hat[s]));
    Poly t = inv_of(acc);
    add_to(t, s2[r]);
    Poly t1{};
    for (int i = 0; i < kN; ++i) std::tie(t1[i], t0[r][i]) = power2round(t[i]);
    pack_bits(kp.pk, t1, kT1Bits);
  }
  const Bytes tr = h_shake(kp.pk, 64);
  kp.sk = concat({rho, key, tr});
  for (const auto& p : s1) pack_signed(kp.sk, p, kEta, kEtaBits);
  for (const auto& p : s2) pack_signed(kp.sk, p, kEta, kEtaBits);
  for (const auto& p : t0) pack_signed(kp.sk, p, 1 << (kD - 1), kT0Bits);
  return kp;
}

Bytes sign(ByteView sk_bytes, ByteView message, const Key32& rnd, ByteView context) {
  const auto sk = decode_sk(sk_bytes);
  const Bytes mp = message_prime(message, context);
  VecL s1_hat{};
  VecK s2_hat{}, t0_hat{};
  for (int i = 0; i < kL; ++i) s1_hat[i] = ntt_of(sk.s1[i]);
  for (int i = 0; i < kK; ++i) s2_hat[i] = ntt_of(sk.s2[i]);
  for (int i = 0; i < kK; ++i) t0_hat[i] = ntt_of(sk.t0[i]);
  const auto a = expand_a(sk.rho);
  const Bytes mu = h_shake(concat({sk.tr, mp}), 64);
  const Bytes rho2 = h_shake(concat({sk.key, rnd, mu}), 64);

  for (std::uint32_t kappa = 0;; kappa += kL) {
    VecL y{}, y_hat{};
    for (int r = 0; r < kL; ++r) {
      const std::uint32_t idx = kappa + static_cast<std::uint32_t>(r);
      const Bytes seed = concat({rho2, Bytes{static_cast<std::uint8_t>(idx & 0xff), static_cast<std::uint8_t>(idx >> 8)}});
      y[r] = unpack_signed(h_shake(seed, 32 * kZBits), kGamma1, kZBits);
      y_hat[r] = ntt_of(y[r]);
    }
    VecK w{}, w1{};
    for (int r = 0; r < kK; ++r) {
      Poly acc{};
      for (int s = 0; s < kL; ++s) add_to(acc, pointwise(a[r][s], y_hat[s]));
      w[r] = inv_of(acc);
      for (int i = 0; i < kN; ++i) w1[r][i] = high_bits(w[r][i]);
    }
    const Bytes c_tilde = h_shake(concat({mu, w1_encode(w1)}), kCTildeBytes);
    const Poly c_hat = ntt_of(sample_in_ball(c_tilde));

    VecL z{};
    bool reject = false;
    for (int r = 0; r < kL && !reject; ++r) {
      z[r] = y[r];
      add_to(z[r], inv_of(pointwise(c_hat, s1_hat[r])));
      reject = inf_norm(z[r]) >= kGamma1 - kBeta;
    }
    if (reject) continue;

    VecK r_minus{};
    for (int r = 0; r < kK && !reject; ++r) {
      r_minus[r] = sub(w[r], inv_of(pointwise(c_hat, s2_hat[r])));
      for (int i = 0; i < kN && !reject; ++i) reject = std::abs(low_bits(r_minus[r][i])) >= kGamma2 - kBeta;
    }
    if (reject) continue;

    VecK h{};
    int ones = 0;
    for (int r = 0; r < kK && !reject; ++r) {
      const Poly ct0 = inv_of(pointwise(c_hat, t0_hat[r]));
      if (inf_norm(ct0) >= kGamma2) reject = true;
      Poly shifted = r_minus[r];
      add_to(shifted, ct0);
      for (int i = 0; i < kN; ++i) {
        // MakeHint(-ct0, w - cs2 + ct0)
        h[r][i] = high_bits(shifted[i]) != high_bits(mod_q(std::int64_t{shifted[i]} - ct0[i]));
        ones += h[r][i];
      }
    }
    if (reject || ones > kOmega) continue;

    Bytes sig(c_tilde.begin(), c_tilde.end());
    for (const auto& p : z) pack_signed(sig, p, kGamma1, kZBits);
    Bytes hints(static_cast<std::size_t>(kOmega + kK), 0);
    std::size_t index = 0;
    for (int r = 0; r < kK; ++r) {
      for (int i = 0; i < kN; ++i)
        if (h[r][i]) hints[index++] = static_cast<std::uint8_t>(i);
      hints[static_cast<std::size_t>(kOmega + r)] = static_cast<std::uint8_t>(index);
    }
    append(sig, hints);
    return sig;
  }
}

bool verify(ByteView pk, ByteView message, ByteView sig, ByteView context) {
  if (pk.size() != kPublicKeyBytes || sig.size() != kSignatureBytes || context.size() > 255) return false;
  const ByteView rho = pk.subspan(0, 32);
  VecK t1{};
  for (int r = 0; r < kK; ++r) t1[r] = unpack_bits(pk.subspan(32 + 320 * static_cast<std::size_t>(r), 320), kT1Bits);

  const ByteView c_tilde = sig.subspan(0, kCTildeBytes);
  VecL z{};
  std::size_t p = kCTildeBytes;
  for (auto& v : z) {
    v = unpack_signed(sig.subspan(p, 32 * kZBits), kGamma1, kZBits);
    p += 32 * kZBits;
  }
  const auto h = hint_unpack(sig.subspan(p));
  if (!h) return false;
  for (const auto& v : z)
    if (inf_norm(v) >= kGamma1 - kBeta) return false;

  const auto a = expand_a(rho);
  const Bytes tr = h_shake(pk, 64);
  const Bytes mu = h_shake(concat({tr, message_prime(message, context)}), 64);
  const Poly c_hat = ntt_of(sample_in_ball(c_tilde));
  VecL z_hat{};
  for (int i = 0; i < kL; ++i) z_hat[i] = ntt_of(z[i]);

  VecK w1{};
  for (int r = 0; r < kK; ++r) {
    Poly acc{};
    for (int s = 0; s < kL; ++s) add_to(acc, pointwise(a[r][s], z_hat[s]));
    Poly t_scaled{};
    for (int i = 0; i < kN; ++i) t_scaled[i] = mod_q(std::int64_t{t1[r][i]} << kD);
    const Poly w_approx = inv_of(sub(acc, pointwise(c_hat, ntt_of(t_scaled))));
    for (int i = 0; i < kN; ++i) w1[r][i] = use_hint((*h)[r][i] != 0, w_approx[i]);
  }
  const Bytes again = h_shake(concat({mu, w1_encode(w1)}), kCTildeBytes);
  return ct_equal(again, c_tilde);
}

}  // namespace egw::access::mldsa
