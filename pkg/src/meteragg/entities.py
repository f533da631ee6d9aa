"""Smart meter, data aggregator and control center state machines.

Every entity state type lists exactly the secrets that entity is given at
registration.  The aggregator never sees R3 seeds or the watermark key; the
control center never sees AES keys or R1 seeds.  States use ``__slots__`` so
nothing else can be attached to them later.

Aggregator and control-center states keep their own frame clock
(``expected_frame``).  Masks are always derived from that clock, never from a
message header; the header frame index is checked only for freshness.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping

from .core import EpochConfig, HashAlg, MeterId, MeterReading, Mode, Registry
from .errors import FrameMismatch, MissingMeter, PaddingViolation, TamperSuspected
from .shield import (
    MASK64,
    SEED_SIZE,
    AesKey,
    SeedSet,
    Stream,
    add_mask,
    aes_decrypt,
    aes_encrypt,
    block_decode,
    block_encode,
    draw_frame,
    mask_value,
    to_signed64,
    xor_layer,
)
from .watermark import WatermarkSchedule, generate_watermark, rde_embed, rde_verify_extract, rls_embed, rls_verify_extract

WIRE_VERSION = 1
DA_SENDER_ID = 0
HEADER = struct.Struct(">BBII")
SM_PAYLOAD_SIZE = 16
DA_PAYLOAD_SIZE = 8


@dataclass(frozen=True)
class ProtocolMessage:
    sender: int
    frame: int
    payload: bytes
    mode: Mode = Mode.LOW_FREQUENCY
    version: int = WIRE_VERSION

    def to_bytes(self) -> bytes:
        return HEADER.pack(self.version, self.mode.wire_code, self.sender, self.frame) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProtocolMessage":
        if len(data) not in (HEADER.size + SM_PAYLOAD_SIZE, HEADER.size + DA_PAYLOAD_SIZE):
            raise ValueError(f"bad message length {len(data)}")
        version, mode, sender, frame = HEADER.unpack_from(data)
        if version != WIRE_VERSION:
            raise ValueError(f"unsupported wire version {version}")
        if mode not in (0, 1):
            raise ValueError(f"bad mode byte {mode}")
        return cls(sender, frame, bytes(data[HEADER.size:]),
                   Mode.LOW_FREQUENCY if mode == 0 else Mode.HIGH_FREQUENCY, version)

    @property
    def value(self) -> int:
        """Payload read as a big-endian unsigned integer."""
        return int.from_bytes(self.payload, "big")


@dataclass(frozen=True)
class Aggregate:
    frame: int
    raw: int
    scale: int

    @property
    def energy(self) -> Decimal:
        return Decimal(self.raw) / Decimal(self.scale)


@dataclass(slots=True)
class SmState:
    meter: MeterId
    aes_key: AesKey
    seed_r1: bytes
    seed_r3: bytes
    schedule: WatermarkSchedule
    mode: Mode
    next_frame: int = 1


@dataclass(slots=True)
class DaState:
    meter_keys: dict[int, AesKey]
    r1_seeds: dict[int, bytes]
    r2_seed: bytes
    mode: Mode
    freshness: bool = True
    expected_frame: int = 1


@dataclass(slots=True)
class CcState:
    registry: Registry
    r3_seeds: dict[int, bytes]
    r2_seed: bytes
    schedule: WatermarkSchedule
    mode: Mode
    scale: int
    freshness: bool = True
    expected_frame: int = 1

    @classmethod
    def from_secrets(cls, registry: Registry, watermark_key: bytes, timestamps, hash_alg: HashAlg,
                     r3_seeds: Mapping[int, bytes], r2_seed: bytes, mode: Mode, scale: int,
                     freshness: bool = True) -> "CcState":
        schedule = generate_watermark(watermark_key, timestamps, hash_alg)
        return cls(registry, dict(r3_seeds), r2_seed, schedule, mode, scale, freshness)


def _check_reading(state: SmState, d: MeterReading, frame: int) -> None:
    if d.meter.index != state.meter.index:
        raise ValueError(f"reading of meter {d.meter.index} given to meter {state.meter.index}")
    if d.frame != frame:
        raise ValueError(f"reading is for frame {d.frame}, not {frame}")


def _seal(state: SmState, plaintext: int, frame: int, r1: int) -> ProtocolMessage:
    e = aes_encrypt(block_encode(plaintext), state.aes_key)
    return ProtocolMessage(state.meter.index, frame, xor_layer(e, r1), state.mode)


def sm_step_low(state: SmState, d: MeterReading, frame: int) -> ProtocolMessage:
    if state.mode is not Mode.LOW_FREQUENCY:
        raise ValueError("meter is configured for high-frequency operation")
    if frame != state.next_frame:
        raise ValueError(f"meter expects frame {state.next_frame}, got {frame}")
    _check_reading(state, d, frame)
    i = state.meter.index
    r3 = mask_value(Stream.R3, state.seed_r3, i, frame)
    r1 = mask_value(Stream.R1, state.seed_r1, i, frame)
    plaintext = add_mask(rls_embed(d.raw, state.schedule.bit(frame)), r3)
    state.next_frame += 1
    return _seal(state, plaintext, frame, r1)


def sm_step_high(state: SmState, d1: MeterReading, d2: MeterReading,
                 pair_index: int) -> tuple[ProtocolMessage, ProtocolMessage]:
    if state.mode is not Mode.HIGH_FREQUENCY:
        raise ValueError("meter is configured for low-frequency operation")
    f1, f2 = 2 * pair_index - 1, 2 * pair_index
    if f1 != state.next_frame:
        raise ValueError(f"meter expects frame {state.next_frame}, got pair {f1},{f2}")
    _check_reading(state, d1, f1)
    _check_reading(state, d2, f2)
    i = state.meter.index
    a, b = rde_embed(d1.raw, d2.raw, state.schedule.bit(f2))
    r1 = mask_value(Stream.R1, state.seed_r1, i, f2)
    p1 = add_mask(a, mask_value(Stream.R3, state.seed_r3, i, f1))
    p2 = add_mask(b, mask_value(Stream.R3, state.seed_r3, i, f2))
    state.next_frame += 2
    return _seal(state, p1, f1, r1), _seal(state, p2, f2, r1)


def _check_header(msg: ProtocolMessage, expected_frame: int, mode: Mode, freshness: bool,
                  payload_size: int) -> None:
    if freshness and msg.frame != expected_frame:
        raise FrameMismatch(expected_frame, msg.frame)
    if msg.mode is not mode or len(msg.payload) != payload_size:
        raise TamperSuspected(f"malformed message from sender {msg.sender}", msg.sender)


def da_step(state: DaState, msgs: Iterable[ProtocolMessage]) -> ProtocolMessage:
    """Unwrap every meter's message for the current frame and forward the masked sum."""
    frame = state.expected_frame
    try:
        by_sender: dict[int, ProtocolMessage] = {}
        for msg in msgs:
            _check_header(msg, frame, state.mode, state.freshness, SM_PAYLOAD_SIZE)
            if msg.sender not in state.meter_keys:
                raise TamperSuspected(f"message from unregistered sender {msg.sender}", msg.sender)
            if msg.sender in by_sender:
                raise TamperSuspected(f"duplicate message from meter {msg.sender}", msg.sender)
            by_sender[msg.sender] = msg
        r1_frame = draw_frame(Stream.R1, frame, state.mode)
        q = 0
        for i, key in state.meter_keys.items():
            msg = by_sender.get(i)
            if msg is None:
                raise MissingMeter(i, frame)
            r1 = mask_value(Stream.R1, state.r1_seeds[i], i, r1_frame)
            try:
                q += block_decode(aes_decrypt(xor_layer(msg.payload, r1), key))
            except PaddingViolation as exc:
                raise TamperSuspected(f"meter {i}: {exc}", i) from exc
        r2 = mask_value(Stream.R2, state.r2_seed, DA_SENDER_ID, draw_frame(Stream.R2, frame, state.mode))
        q_masked = (q & MASK64) ^ r2
        return ProtocolMessage(DA_SENDER_ID, frame, q_masked.to_bytes(DA_PAYLOAD_SIZE, "big"), state.mode)
    finally:
        state.expected_frame += 1


def _unmask_aggregate(state: CcState, msg: ProtocolMessage, frame: int) -> int:
    _check_header(msg, frame, state.mode, state.freshness, DA_PAYLOAD_SIZE)
    if msg.sender != DA_SENDER_ID:
        raise TamperSuspected(f"aggregate from unexpected sender {msg.sender}", msg.sender)
    r2 = mask_value(Stream.R2, state.r2_seed, DA_SENDER_ID, draw_frame(Stream.R2, frame, state.mode))
    q = msg.value ^ r2
    r3_sum = sum(mask_value(Stream.R3, state.r3_seeds[m.index], m.index, frame)
                 for m in state.registry.meters)
    return to_signed64(q - r3_sum)


def cc_step_low(state: CcState, msg: ProtocolMessage) -> Aggregate:
    if state.mode is not Mode.LOW_FREQUENCY:
        raise ValueError("control center is configured for high-frequency operation")
    frame = state.expected_frame
    try:
        v = _unmask_aggregate(state, msg, frame)
        d = rls_verify_extract(v, state.schedule.bit(frame), state.registry.effective_n)
        return Aggregate(frame, d, state.scale)
    finally:
        state.expected_frame += 1


def cc_step_high(state: CcState, msg1: ProtocolMessage,
                 msg2: ProtocolMessage) -> tuple[Aggregate, Aggregate]:
    if state.mode is not Mode.HIGH_FREQUENCY:
        raise ValueError("control center is configured for low-frequency operation")
    f1 = state.expected_frame
    f2 = f1 + 1
    try:
        v1 = _unmask_aggregate(state, msg1, f1)
        v2 = _unmask_aggregate(state, msg2, f2)
        d1, d2 = rde_verify_extract(v1, v2, state.schedule.bit(f2), state.registry.effective_n)
        return Aggregate(f1, d1, state.scale), Aggregate(f2, d2, state.scale)
    finally:
        state.expected_frame += 2


@dataclass
class Deployment:
    """All entity states of one epoch, as produced by the initialization phase."""

    epoch: EpochConfig
    registry: Registry
    meters: dict[int, SmState]
    aggregator: DaState
    control_center: CcState
    seeds: dict[int, SeedSet] = field(repr=False)


def provision(epoch: EpochConfig, rng: random.Random, freshness: bool = True) -> Deployment:
    """Run registration, key generation and seed distribution for one epoch.

    This traffic is assumed to travel over a secure channel, so it is modelled
    as direct construction of each entity's state.
    """
    registry = epoch.registry()
    watermark_key = rng.randbytes(epoch.hash_alg.digest_size)
    r2_seed = rng.randbytes(SEED_SIZE)
    schedule = generate_watermark(watermark_key, epoch.timestamps, epoch.hash_alg, epoch.m)
    seeds: dict[int, SeedSet] = {}
    keys: dict[int, AesKey] = {}
    meters: dict[int, SmState] = {}
    for meter in registry.meters:
        i = meter.index
        s = seeds[i] = SeedSet(*_distinct_seeds(rng, r2_seed))
        keys[i] = AesKey(rng.randbytes(epoch.aes_bits // 8))
        meters[i] = SmState(meter, keys[i], s.seed_r1, s.seed_r3, schedule, epoch.mode)
    da = DaState(dict(keys), {i: s.seed_r1 for i, s in seeds.items()}, r2_seed, epoch.mode, freshness)
    cc = CcState.from_secrets(registry, watermark_key, epoch.timestamps, epoch.hash_alg,
                              {i: s.seed_r3 for i, s in seeds.items()}, r2_seed, epoch.mode,
                              epoch.scale, freshness)
    return Deployment(epoch, registry, meters, da, cc, seeds)


def _distinct_seeds(rng: random.Random, r2_seed: bytes) -> tuple[bytes, bytes, bytes]:
    while True:
        r1, r3 = rng.randbytes(SEED_SIZE), rng.randbytes(SEED_SIZE)
        if len({r1, r2_seed, r3}) == 3:
            return r1, r2_seed, r3
