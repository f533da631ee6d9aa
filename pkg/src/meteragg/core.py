"""Domain types, fixed-point readings and the meter registry."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence, Union

from .errors import ConfigInvalid, NegativeReading, Overflow

RAW_BOUND = 1 << 40
MAX_METERS = 1 << 20
ALLOWED_SCALES = (1, 10, 100, 1000)
DEFAULT_SCALE = 1000

# Frame cadences (seconds between readings) for the two meter classes.
LOW_FREQUENCY_STEP = 3600
HIGH_FREQUENCY_STEP = 60

Number = Union[int, float, str, Decimal]


class Mode(enum.Enum):
    LOW_FREQUENCY = "low"
    HIGH_FREQUENCY = "high"

    @property
    def wire_code(self) -> int:
        return 0 if self is Mode.LOW_FREQUENCY else 1

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, Mode):
            return value
        v = str(value).strip().lower()
        aliases = {"low": cls.LOW_FREQUENCY, "rls": cls.LOW_FREQUENCY,
                   "high": cls.HIGH_FREQUENCY, "rde": cls.HIGH_FREQUENCY}
        try:
            return aliases[v]
        except KeyError:
            raise ConfigInvalid(f"unknown mode {value!r}") from None


class HashAlg(enum.Enum):
    SHA224 = "sha224"
    SHA256 = "sha256"
    SHA512 = "sha512"

    @property
    def digest_size(self) -> int:
        return {"sha224": 28, "sha256": 32, "sha512": 64}[self.value]

    @property
    def bits(self) -> int:
        return self.digest_size * 8

    def digest(self, data: bytes) -> bytes:
        return getattr(hashlib, self.value)(data).digest()

    @classmethod
    def parse(cls, value: "str | HashAlg") -> "HashAlg":
        if isinstance(value, HashAlg):
            return value
        v = str(value).strip().lower().replace("-", "")
        try:
            return cls(v)
        except ValueError:
            raise ConfigInvalid(f"unknown hash algorithm {value!r}") from None


AES_BITS = (128, 192, 256)


@dataclass(frozen=True, order=True)
class MeterId:
    index: int
    is_dummy: bool = False

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("meter index is 1-based")

    def __int__(self) -> int:
        return self.index


@dataclass(frozen=True)
class MeterReading:
    raw: int
    meter: MeterId
    frame: int

    def __post_init__(self):
        if self.raw < 0:
            raise NegativeReading(f"negative raw reading {self.raw}")
        if self.raw >= RAW_BOUND:
            raise Overflow(f"raw reading {self.raw} exceeds 2^40")
        if self.meter.is_dummy and self.raw != 0:
            raise ValueError("dummy meter always reads 0")
        if self.frame < 1:
            raise ValueError("frame index is 1-based")


@dataclass(frozen=True)
class Registry:
    meters: tuple[MeterId, ...]

    @property
    def effective_n(self) -> int:
        return len(self.meters)

    @property
    def n_registered(self) -> int:
        return sum(1 for m in self.meters if not m.is_dummy)

    @property
    def dummy(self) -> MeterId | None:
        last = self.meters[-1]
        return last if last.is_dummy else None


def build_registry(n_registered: int) -> Registry:
    """Register ``n_registered`` meters, padding with a zero-reading dummy to an odd count."""
    if n_registered < 1:
        raise ValueError("at least one meter must register")
    if n_registered > MAX_METERS:
        raise ValueError(f"at most {MAX_METERS} meters are supported")
    meters = [MeterId(i) for i in range(1, n_registered + 1)]
    if n_registered % 2 == 0:
        meters.append(MeterId(n_registered + 1, is_dummy=True))
    return Registry(tuple(meters))


def fixed_point_encode(value: Number, scale: int = DEFAULT_SCALE) -> int:
    """Round ``value * scale`` half-up to an integer raw reading."""
    d = value if isinstance(value, Decimal) else Decimal(str(value))
    if d < 0:
        raise NegativeReading(f"negative energy value {value}")
    raw = int((d * scale).quantize(Decimal(1), rounding=ROUND_HALF_UP))
    if raw >= RAW_BOUND:
        raise Overflow(f"{value} x {scale} exceeds the 2^40 raw bound")
    return raw


def fixed_point_decode(raw: int, scale: int = DEFAULT_SCALE) -> Decimal:
    return Decimal(raw) / Decimal(scale)


def cadence_timestamps(m: int, step: int) -> tuple[int, ...]:
    """Frame timestamps ``step, 2*step, ..., m*step`` relative to epoch start."""
    return tuple(step * j for j in range(1, m + 1))


@dataclass(frozen=True)
class EpochConfig:
    mode: Mode
    n_registered: int
    m: int
    hash_alg: HashAlg = HashAlg.SHA256
    aes_bits: int = 128
    scale: int = DEFAULT_SCALE
    timestamps: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        object.__setattr__(self, "hash_alg", HashAlg.parse(self.hash_alg))
        if not self.timestamps:
            step = LOW_FREQUENCY_STEP if self.mode is Mode.LOW_FREQUENCY else HIGH_FREQUENCY_STEP
            object.__setattr__(self, "timestamps", cadence_timestamps(self.m, step))
        else:
            object.__setattr__(self, "timestamps", tuple(int(t) for t in self.timestamps))
        self.validate()

    def validate(self) -> None:
        if self.m < 1:
            raise ConfigInvalid("m must be at least 1")
        if self.mode is Mode.HIGH_FREQUENCY and self.m % 2:
            raise ConfigInvalid("high-frequency epochs need an even number of frames")
        if not 1 <= self.n_registered <= MAX_METERS:
            raise ConfigInvalid(f"n_registered must be in [1, {MAX_METERS}]")
        if self.scale not in ALLOWED_SCALES:
            raise ConfigInvalid(f"scale must be one of {ALLOWED_SCALES}")
        if self.aes_bits not in AES_BITS:
            raise ConfigInvalid(f"aes_bits must be one of {AES_BITS}")
        if len(self.timestamps) != self.m:
            raise ConfigInvalid("need exactly one timestamp per frame")
        if any(t < 0 or t >= 1 << 64 for t in self.timestamps):
            raise ConfigInvalid("timestamps must fit in 64 unsigned bits")
        if any(b <= a for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise ConfigInvalid("timestamps must be strictly increasing")

    @property
    def effective_n(self) -> int:
        return self.n_registered + (self.n_registered % 2 == 0)

    def registry(self) -> Registry:
        return build_registry(self.n_registered)


def frame_pairs(m: int) -> Sequence[tuple[int, int]]:
    """``[(1, 2), (3, 4), ...]`` for a high-frequency epoch of ``m`` frames."""
    return [(2 * j - 1, 2 * j) for j in range(1, m // 2 + 1)]
