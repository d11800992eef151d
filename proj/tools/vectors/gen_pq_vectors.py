# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The egw Authors
"""Regenerates tests/data/pq_vectors.json from the kyber-py and dilithium-py
reference implementations (pip install kyber-py dilithium-py)."""

import hashlib
import json
import sys

from dilithium_py.ml_dsa import ML_DSA_44
from kyber_py.ml_kem import ML_KEM_512


def seed(label, i, n=32):
    return hashlib.shake_256(f"egw-kat/{label}/{i}".encode()).digest(n)


def kem_vectors():
    out = []
    for i in range(4):
        d, z, m = seed("d", i), seed("z", i), seed("m", i)
        ek, dk = ML_KEM_512._keygen_internal(d, z)
        ss, ct = ML_KEM_512._encaps_internal(ek, m)
        assert ML_KEM_512.decaps(dk, ct) == ss
        bad = bytearray(ct)
        bad[i * 97 % len(bad)] ^= 1 << (i % 8)
        out.append({
            "d": d.hex(), "z": z.hex(), "m": m.hex(),
            "ek": ek.hex(), "dk": dk.hex(), "ct": ct.hex(), "ss": ss.hex(),
            "ct_tampered": bytes(bad).hex(),
            "ss_tampered": ML_KEM_512.decaps(dk, bytes(bad)).hex(),
        })
    return out


def dsa_vectors():
    out = []
    for i in range(4):
        xi = seed("xi", i)
        pk, sk = ML_DSA_44._keygen_internal(xi)
        msg = seed("msg", i, 17 + 29 * i)
        ctx = b"" if i % 2 == 0 else b"egw-request"
        rnd = bytes(32) if i < 2 else seed("rnd", i)
        mp = bytes([0, len(ctx)]) + ctx + msg
        sig = ML_DSA_44._sign_internal(sk, mp, rnd)
        assert ML_DSA_44.verify(pk, msg, sig, ctx=ctx)
        out.append({
            "xi": xi.hex(), "msg": msg.hex(), "ctx": ctx.hex(), "rnd": rnd.hex(),
            "pk": pk.hex(), "sk": sk.hex(), "sig": sig.hex(),
        })
    return out


if __name__ == "__main__":
    path = sys.argv[1] if len(sys.argv) > 1 else "tests/data/pq_vectors.json"
    with open(path, "w") as f:
        json.dump({"ml_kem_512": kem_vectors(), "ml_dsa_44": dsa_vectors()}, f, indent=1, sort_keys=True)
        f.write("\n")
