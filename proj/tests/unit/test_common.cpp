// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The egw Authors

#include <doctest.h>

#include "egw/common/bytes.hpp"
#include "egw/common/canonical.hpp"
#include "egw/common/hash.hpp"
#include "egw/common/random.hpp"

using namespace egw;

TEST_CASE("sha256 and hmac match published vectors") {
  CHECK(to_hex(hash::sha256(as_bytes("abc"))) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  // RFC 4231 test case 2
  CHECK(to_hex(hash::hmac_sha256(as_bytes("Jefe"), as_bytes("what do ya want for nothing?"))) ==
        "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
}

TEST_CASE("sha3 / shake match published vectors") {
  CHECK(to_hex(hash::sha3_256(as_bytes(""))) ==
        "a7ffc6f8bf1ed76651c14756a061d662f580ff4de43b49fa82d80a4b80f8434a");
  CHECK(to_hex(hash::shake128(as_bytes(""), 16)) == "7f9c2ba4e88f827d616045507605853e");
  CHECK(to_hex(hash::shake256(as_bytes(""), 16)) == "46b9dd2b0ba88d13233b3feb743eeb24");
}

TEST_CASE("crc32 check value") { CHECK(hash::crc32(as_bytes("123456789")) == 0xCBF43926u); }

TEST_CASE("hex roundtrip and rejects bad input") {
  Bytes raw{0x00, 0x01, 0xab, 0xff};
  CHECK(to_hex(raw) == "0001abff");
  CHECK(from_hex("0001ABff") == raw);
  CHECK_THROWS_AS(from_hex("abc"), Error);
  CHECK_THROWS_AS(from_hex("zz"), Error);
}

TEST_CASE("canonical json sorts keys and drops whitespace") {
  Json j = {{"zeta", 1}, {"alpha", {{"b", "x"}, {"a", -3}}}, {"mid", Json::array({2, 1})}};
  CHECK(canonical_json(j) == R"({"alpha":{"a":-3,"b":"x"},"mid":[2,1],"zeta":1})");
  Json k = Json::parse(R"({ "mid": [2, 1], "zeta": 1, "alpha": {"b": "x", "a": -3} })");
  CHECK(canonical_digest(j) == canonical_digest(k));

  Json bad = {{"id", std::string("\xe2\x82")}};
  CHECK_THROWS_AS(canonical_json(bad), Error);
}

TEST_CASE("drbg is deterministic per seed") {
  Drbg a(42), b(42), c(43);
  auto x = a.bytes(100);
  CHECK(x == b.bytes(100));
  CHECK(x != c.bytes(100));
  for (int i = 0; i < 1000; ++i) CHECK(a.uniform(7) < 7);
}
