"""Confidentiality layer: AES blocks, the block codec and the R1/R2/R3 mask streams.

Mask topology:

* R1 (128-bit, per meter) is shared by a smart meter and the aggregator and
  XORed over the AES ciphertext.
* R2 (64-bit, one per aggregator) is shared by the aggregator and the control
  center and XORed over the aggregate.
* R3 (64-bit, per meter) is shared by a smart meter and the control center and
  added mod 2^64 before encryption, so it survives the aggregator's summation.

Each stream value is a keyed hash of ``(seed, tag, meter, frame)``; both
holders of a seed derive it independently with no shared generator state.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from . import aes
from .core import Mode
from .errors import PaddingViolation

MASK64 = (1 << 64) - 1
BLOCK_SIZE = 16
SEED_SIZE = 32


class Stream(enum.IntEnum):
    R1 = 1
    R2 = 2
    R3 = 3

    @property
    def width(self) -> int:
        return 128 if self is Stream.R1 else 64


@dataclass(frozen=True)
class AesKey:
    key: bytes = field(repr=False)
    _enc: list = field(init=False, repr=False, compare=False)
    _dec: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.key) not in (16, 24, 32):
            raise ValueError(f"AES key must be 16, 24 or 32 bytes, got {len(self.key)}")
        enc, dec = aes.expand_key(self.key)
        object.__setattr__(self, "_enc", enc)
        object.__setattr__(self, "_dec", dec)

    @property
    def bits(self) -> int:
        return len(self.key) * 8


@dataclass(frozen=True)
class SeedSet:
    """Seeds of one meter. ``seed_r2`` is the aggregator's, common to all meters."""

    seed_r1: bytes = field(repr=False)
    seed_r2: bytes = field(repr=False)
    seed_r3: bytes = field(repr=False)

    def __post_init__(self):
        seeds = (self.seed_r1, self.seed_r2, self.seed_r3)
        if any(len(s) != SEED_SIZE for s in seeds):
            raise ValueError(f"seeds must be {SEED_SIZE} bytes")
        if len(set(seeds)) != 3:
            raise ValueError("R1/R2/R3 seeds must be pairwise distinct")


def mask_value(stream: Stream, seed: bytes, meter: int, frame: int, width: int | None = None) -> int:
    """Pseudorandom mask for ``(meter, frame)`` from a shared ``seed``.

    The aggregator-wide R2 stream uses meter index 0.
    """
    stream = Stream(stream)
    if width is None:
        width = stream.width
    if width not in (64, 128) or (width == 128) != (stream is Stream.R1):
        raise ValueError(f"{stream.name} masks are {stream.width} bits wide")
    digest = hashlib.sha256(
        seed + bytes((stream,)) + int(meter).to_bytes(4, "big") + int(frame).to_bytes(4, "big")
    ).digest()
    return int.from_bytes(digest[: width // 8], "big")


def draw_frame(stream: Stream, frame: int, mode: Mode) -> int:
    """Frame index whose draw of ``stream`` protects data of ``frame``.

    Low-frequency meters draw every stream at every frame.  High-frequency
    meters draw R3 at both frames of a pair, R1 and R2 once at the even frame.
    """
    if mode is Mode.HIGH_FREQUENCY and stream is not Stream.R3:
        return frame + (frame % 2)
    return frame


def add_mask(v: int, r: int) -> int:
    return (v + r) & MASK64


def remove_mask(v: int, r: int) -> int:
    return (v - r) & MASK64


def to_signed64(v: int) -> int:
    v &= MASK64
    return v - (1 << 64) if v >> 63 else v


def block_encode(v: int) -> bytes:
    if not 0 <= v <= MASK64:
        raise ValueError("block plaintext must be a 64-bit unsigned value")
    return bytes(8) + v.to_bytes(8, "big")


def block_decode(block: bytes) -> int:
    if len(block) != BLOCK_SIZE:
        raise ValueError("block must be 16 bytes")
    if any(block[:8]):
        raise PaddingViolation("nonzero block padding: wrong key or corrupted ciphertext")
    return int.from_bytes(block[8:], "big")


def aes_encrypt(block: bytes, key: AesKey) -> bytes:
    return aes.encrypt_block(block, key._enc)


def aes_decrypt(block: bytes, key: AesKey) -> bytes:
    return aes.decrypt_block(block, key._dec)


def xor_layer(block: bytes, r: int) -> bytes:
    """XOR a 128-bit mask over a block; applying it twice is the identity."""
    if len(block) != BLOCK_SIZE:
        raise ValueError("block must be 16 bytes")
    return (int.from_bytes(block, "big") ^ r).to_bytes(BLOCK_SIZE, "big")
