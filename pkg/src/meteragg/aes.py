"""Single-block AES (FIPS-197) for 128/192/256-bit keys.

A table-driven software implementation: every round costs the same, so
encryption time grows with the 10/12/14 round count the way it does on a
microcontroller without AES hardware.  Round keys are expanded once per key.
"""

from __future__ import annotations


def _xtime(a: int) -> int:
    a <<= 1
    return (a ^ 0x11B) if a & 0x100 else a


def _gmul(a: int, b: int) -> int:
    p = 0
    while b:
        if b & 1:
            p ^= a
        a = _xtime(a)
        b >>= 1
    return p


def _build_sbox() -> tuple[list[int], list[int]]:
    inv = [0] * 256
    for a in range(1, 256):
        for b in range(1, 256):
            if _gmul(a, b) == 1:
                inv[a] = b
                break
    sbox = [0] * 256
    for a in range(256):
        x = inv[a]
        s = x
        for shift in range(1, 5):
            s ^= ((x << shift) | (x >> (8 - shift))) & 0xFF
        sbox[a] = s ^ 0x63
    inv_sbox = [0] * 256
    for a, s in enumerate(sbox):
        inv_sbox[s] = a
    return sbox, inv_sbox


SBOX, INV_SBOX = _build_sbox()


def _ror8(x: int) -> int:
    return ((x >> 8) | (x << 24)) & 0xFFFFFFFF


def _tables(box: list[int], coeffs: tuple[int, int, int, int]) -> tuple[list[int], ...]:
    t0 = []
    for x in range(256):
        s = box[x]
        c0, c1, c2, c3 = (_gmul(s, c) for c in coeffs)
        t0.append((c0 << 24) | (c1 << 16) | (c2 << 8) | c3)
    t1 = [_ror8(v) for v in t0]
    t2 = [_ror8(v) for v in t1]
    t3 = [_ror8(v) for v in t2]
    return t0, t1, t2, t3


TE0, TE1, TE2, TE3 = _tables(SBOX, (2, 1, 1, 3))
TD0, TD1, TD2, TD3 = _tables(INV_SBOX, (14, 9, 13, 11))

_RCON = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]
ROUNDS = {16: 10, 24: 12, 32: 14}


def _sub_word(w: int) -> int:
    return ((SBOX[w >> 24] << 24) | (SBOX[(w >> 16) & 0xFF] << 16)
            | (SBOX[(w >> 8) & 0xFF] << 8) | SBOX[w & 0xFF])


def expand_key(key: bytes) -> tuple[list[int], list[int]]:
    """Return (encryption, decryption) round-key words for ``key``."""
    nk = len(key) // 4
    if len(key) not in ROUNDS:
        raise ValueError(f"AES key must be 16, 24 or 32 bytes, got {len(key)}")
    nr = ROUNDS[len(key)]
    words = [int.from_bytes(key[4 * i:4 * i + 4], "big") for i in range(nk)]
    for i in range(nk, 4 * (nr + 1)):
        t = words[i - 1]
        if i % nk == 0:
            t = _sub_word(((t << 8) | (t >> 24)) & 0xFFFFFFFF) ^ (_RCON[i // nk - 1] << 24)
        elif nk > 6 and i % nk == 4:
            t = _sub_word(t)
        words.append(words[i - nk] ^ t)

    # equivalent inverse cipher: reversed round keys, InvMixColumns on the inner ones
    dec: list[int] = []
    for r in range(nr, -1, -1):
        rk = words[4 * r:4 * r + 4]
        if 0 < r < nr:
            rk = [TD0[SBOX[w >> 24]] ^ TD1[SBOX[(w >> 16) & 0xFF]]
                  ^ TD2[SBOX[(w >> 8) & 0xFF]] ^ TD3[SBOX[w & 0xFF]] for w in rk]
        dec.extend(rk)
    return words, dec


def encrypt_block(block: bytes, rk: list[int]) -> bytes:
    if len(block) != 16:
        raise ValueError("AES block must be 16 bytes")
    nr = len(rk) // 4 - 1
    s0 = int.from_bytes(block[0:4], "big") ^ rk[0]
    s1 = int.from_bytes(block[4:8], "big") ^ rk[1]
    s2 = int.from_bytes(block[8:12], "big") ^ rk[2]
    s3 = int.from_bytes(block[12:16], "big") ^ rk[3]
    te0, te1, te2, te3 = TE0, TE1, TE2, TE3
    k = 4
    for _ in range(nr - 1):
        t0 = te0[s0 >> 24] ^ te1[(s1 >> 16) & 0xFF] ^ te2[(s2 >> 8) & 0xFF] ^ te3[s3 & 0xFF] ^ rk[k]
        t1 = te0[s1 >> 24] ^ te1[(s2 >> 16) & 0xFF] ^ te2[(s3 >> 8) & 0xFF] ^ te3[s0 & 0xFF] ^ rk[k + 1]
        t2 = te0[s2 >> 24] ^ te1[(s3 >> 16) & 0xFF] ^ te2[(s0 >> 8) & 0xFF] ^ te3[s1 & 0xFF] ^ rk[k + 2]
        t3 = te0[s3 >> 24] ^ te1[(s0 >> 16) & 0xFF] ^ te2[(s1 >> 8) & 0xFF] ^ te3[s2 & 0xFF] ^ rk[k + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
        k += 4
    sb = SBOX
    out = bytes((
        sb[s0 >> 24], sb[(s1 >> 16) & 0xFF], sb[(s2 >> 8) & 0xFF], sb[s3 & 0xFF],
        sb[s1 >> 24], sb[(s2 >> 16) & 0xFF], sb[(s3 >> 8) & 0xFF], sb[s0 & 0xFF],
        sb[s2 >> 24], sb[(s3 >> 16) & 0xFF], sb[(s0 >> 8) & 0xFF], sb[s1 & 0xFF],
        sb[s3 >> 24], sb[(s0 >> 16) & 0xFF], sb[(s1 >> 8) & 0xFF], sb[s2 & 0xFF],
    ))
    last = (rk[k] << 96) | (rk[k + 1] << 64) | (rk[k + 2] << 32) | rk[k + 3]
    return (int.from_bytes(out, "big") ^ last).to_bytes(16, "big")


def decrypt_block(block: bytes, dk: list[int]) -> bytes:
    if len(block) != 16:
        raise ValueError("AES block must be 16 bytes")
    nr = len(dk) // 4 - 1
    s0 = int.from_bytes(block[0:4], "big") ^ dk[0]
    s1 = int.from_bytes(block[4:8], "big") ^ dk[1]
    s2 = int.from_bytes(block[8:12], "big") ^ dk[2]
    s3 = int.from_bytes(block[12:16], "big") ^ dk[3]
    td0, td1, td2, td3 = TD0, TD1, TD2, TD3
    k = 4
    for _ in range(nr - 1):
        t0 = td0[s0 >> 24] ^ td1[(s3 >> 16) & 0xFF] ^ td2[(s2 >> 8) & 0xFF] ^ td3[s1 & 0xFF] ^ dk[k]
        t1 = td0[s1 >> 24] ^ td1[(s0 >> 16) & 0xFF] ^ td2[(s3 >> 8) & 0xFF] ^ td3[s2 & 0xFF] ^ dk[k + 1]
        t2 = td0[s2 >> 24] ^ td1[(s1 >> 16) & 0xFF] ^ td2[(s0 >> 8) & 0xFF] ^ td3[s3 & 0xFF] ^ dk[k + 2]
        t3 = td0[s3 >> 24] ^ td1[(s2 >> 16) & 0xFF] ^ td2[(s1 >> 8) & 0xFF] ^ td3[s0 & 0xFF] ^ dk[k + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
        k += 4
    ib = INV_SBOX
    out = bytes((
        ib[s0 >> 24], ib[(s3 >> 16) & 0xFF], ib[(s2 >> 8) & 0xFF], ib[s1 & 0xFF],
        ib[s1 >> 24], ib[(s0 >> 16) & 0xFF], ib[(s3 >> 8) & 0xFF], ib[s2 & 0xFF],
        ib[s2 >> 24], ib[(s1 >> 16) & 0xFF], ib[(s0 >> 8) & 0xFF], ib[s3 & 0xFF],
        ib[s3 >> 24], ib[(s2 >> 16) & 0xFF], ib[(s1 >> 8) & 0xFF], ib[s0 & 0xFF],
    ))
    last = (dk[k] << 96) | (dk[k + 1] << 64) | (dk[k + 2] << 32) | dk[k + 3]
    return (int.from_bytes(out, "big") ^ last).to_bytes(16, "big")
