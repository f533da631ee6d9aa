"""Watermark schedules and the two reversible embedding schemes.

RLS (LSB shifting) carries one bit per reading, ``d' = 2d + w``; the control
center checks the parity of the aggregate and halves it back out.

RDE (difference expansion) carries one bit per pair of consecutive frames.
The embedding maps ``(d1, d2) -> (2*d2, 2*d1 + w)``: the pair comes out
swapped, and extraction relabels it.  Both inverses work on the *sum* over an
odd number of meters, because ``n*w`` keeps the parity of ``w`` only when
``n`` is odd.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import HashAlg
from .errors import NonIntegralRecovery, Overflow, TamperDetected

INT63_MAX = (1 << 63) - 1


@dataclass(frozen=True)
class WatermarkSchedule:
    bits: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.bits)

    def bit(self, frame: int) -> int:
        """Watermark bit for 1-based ``frame``."""
        return self.bits[frame - 1]


def hash_frame(key: bytes, timestamp: int, hash_alg: HashAlg) -> bytes:
    return hash_alg.digest(key + timestamp.to_bytes(8, "big"))


def generate_watermark(key: bytes, timestamps: Sequence[int], hash_alg: HashAlg | str,
                       m: int | None = None) -> WatermarkSchedule:
    """XOR-fold the keyed hashes of every frame timestamp into an m-bit schedule.

    Bit ``j`` of the schedule is bit ``(j-1) mod L`` of the fold, counting from
    the most significant bit of its first byte; schedules longer than the hash
    wrap around.
    """
    hash_alg = HashAlg.parse(hash_alg)
    if m is None:
        m = len(timestamps)
    if m < 1:
        raise ValueError("m must be at least 1")
    if len(timestamps) != m:
        raise ValueError(f"expected {m} timestamps, got {len(timestamps)}")
    if not key:
        raise ValueError("watermark key must be non-empty")
    folded = 0
    for t in timestamps:
        folded ^= int.from_bytes(hash_frame(key, t, hash_alg), "big")
    width = hash_alg.bits
    bits = tuple((folded >> (width - 1 - (j % width))) & 1 for j in range(m))
    return WatermarkSchedule(bits)


def _check_bit(w: int) -> None:
    if w not in (0, 1):
        raise ValueError(f"watermark bit must be 0 or 1, got {w!r}")


def rls_embed(d: int, w: int) -> int:
    _check_bit(w)
    if d < 0:
        raise ValueError("reading must be non-negative")
    out = 2 * d + w
    if out > INT63_MAX:
        raise Overflow("watermarked reading exceeds 63 bits")
    return out


def rls_verify_extract(v: int, w: int, effective_n: int) -> int:
    """Check the parity of an aggregate and return the unwatermarked sum.

    ``v`` is the unmasked sum of ``2d + w`` over ``effective_n`` meters, so
    ``v mod 2 == w`` for an odd meter count.
    """
    _check_bit(w)
    if effective_n % 2 == 0:
        raise ValueError("verification needs an odd meter count")
    if v % 2 != w:
        raise TamperDetected(f"aggregate parity {v % 2} does not match watermark bit {w}")
    return (v - effective_n * w) // 2


def rde_embed(d1: int, d2: int, w: int) -> tuple[int, int]:
    _check_bit(w)
    if d1 < 0 or d2 < 0:
        raise ValueError("readings must be non-negative")
    if 2 * max(d1, d2) + 1 > INT63_MAX:
        raise Overflow("expanded pair exceeds 63 bits")
    # both readings are pre-multiplied by 2 so avg and diff/2 stay integral
    avg = (2 * (d1 + d2)) // 2
    diff = 2 * (d1 - d2)
    return avg - diff // 2, avg + diff // 2 + w


def _exact_half(x: int) -> int:
    q, r = divmod(x, 2)
    if r:
        raise NonIntegralRecovery(f"{x} is odd; aggregate cannot be inverted exactly")
    return q


def rde_verify_extract(v1: int, v2: int, w: int, effective_n: int) -> tuple[int, int]:
    """Verify a pair of aggregates and recover the sums for frames ``2j-1`` and ``2j``."""
    _check_bit(w)
    if effective_n % 2 == 0:
        raise ValueError("verification needs an odd meter count")
    if (v2 - v1) % 2 != w:
        raise TamperDetected("tampering detected: pair difference parity does not match watermark bit")
    nw = effective_n * w
    diff = _exact_half(v2 - v1 - nw)
    avg = _exact_half(v2 + v1 - nw)
    return _exact_half(avg + diff), _exact_half(avg - diff)
