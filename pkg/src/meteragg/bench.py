"""Initialization and per-iteration timing of the smart meter side.

Every configuration processes the same fixed inputs on every repetition.
Configurations are timed round-robin inside each repetition so that slow
drift of a shared host hits all of them alike, and each mean drops the top
and bottom 1% of samples.
"""

from __future__ import annotations

import hashlib
import platform
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import trimboth

from .core import HIGH_FREQUENCY_STEP, HashAlg, MeterId, MeterReading, Mode, cadence_timestamps
from .entities import SmState, sm_step_high, sm_step_low
from .shield import AesKey
from .watermark import generate_watermark

MIN_REPETITIONS = 1000
TRIM = 0.01
DEFAULT_FRAMES = 1440  # one day of readings at a 60 s cadence
SCHEMES = ("RLS", "RDE")

_MASTER = bytes(range(32))


@dataclass(frozen=True)
class Timing:
    mean_ms: float
    std_ms: float

    @classmethod
    def from_ns(cls, samples: Sequence[int]) -> "Timing":
        kept = trimboth(np.asarray(samples, dtype=float), TRIM)
        return cls(float(kept.mean()) / 1e6, float(kept.std()) / 1e6)


@dataclass
class BenchReport:
    repetitions: int
    frames: int
    init_time: dict[str, Timing] = field(default_factory=dict)
    iter_time: dict[tuple[int, str], Timing] = field(default_factory=dict)
    host: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        init_base = min((t.mean_ms for t in self.init_time.values()), default=0.0)
        iters = {}
        for (bits, scheme), t in sorted(self.iter_time.items()):
            base = min(v.mean_ms for (b, s), v in self.iter_time.items() if s == scheme)
            iters.setdefault(str(bits), {})[scheme] = {
                "mean_ms": t.mean_ms, "std_ms": t.std_ms, "ratio": t.mean_ms / base if base else None,
            }
        return {
            "repetitions": self.repetitions,
            "frames": self.frames,
            "host": dict(self.host),
            "init_time": {
                name: {"mean_ms": t.mean_ms, "std_ms": t.std_ms,
                       "ratio": t.mean_ms / init_base if init_base else None}
                for name, t in self.init_time.items()
            },
            "iter_time": iters,
        }

    def format_table(self) -> str:
        d = self.to_dict()
        lines = [f"Initialization time ({self.frames} frames, {self.repetitions} repetitions, trimmed mean)",
                 f"{'SHA':>5}  {'mean ms':>10}  {'std ms':>10}  {'ratio':>6}"]
        for name, row in d["init_time"].items():
            lines.append(f"{name.removeprefix('sha'):>5}  {row['mean_ms']:10.4f}  {row['std_ms']:10.4f}  {row['ratio']:6.2f}")
        lines.append("")
        lines.append("Iteration time for 1 SM (RLS: one frame, RDE: one pair of frames)")
        lines.append(f"{'AES':>5}  {'RLS ms':>10}  {'(std)':>8}  {'ratio':>6}  {'RDE ms':>10}  {'(std)':>8}  {'ratio':>6}")
        for bits, row in d["iter_time"].items():
            cells = []
            for scheme in SCHEMES:
                c = row.get(scheme)
                cells.append("" if c is None else f"{c['mean_ms']:10.4f}  {c['std_ms']:8.4f}  {c['ratio']:6.2f}")
            lines.append(f"{bits:>5}  " + "  ".join(cells))
        return "\n".join(lines)


def host_descriptor() -> dict[str, str]:
    return {
        "machine": platform.machine(),
        "processor": platform.processor() or "unknown",
        "python": platform.python_version(),
        "system": f"{platform.system()} {platform.release()}",
    }


def _interleaved(workloads: dict, repetitions: int,
                 setups: dict | None = None) -> dict[object, list[int]]:
    samples: dict[object, list[int]] = {k: [] for k in workloads}
    clock = time.perf_counter_ns
    for _ in range(repetitions):
        for key, fn in workloads.items():
            if setups:
                setups[key]()
            t0 = clock()
            fn()
            samples[key].append(clock() - t0)
    return samples


def init_workload(hash_alg: HashAlg, frames: int) -> Callable[[], object]:
    """Key and seed setup plus watermark generation for ``frames`` frames."""
    timestamps = cadence_timestamps(frames, HIGH_FREQUENCY_STEP)

    def run():
        k_w = hash_alg.digest(_MASTER + b"watermark-key")
        seeds = [hashlib.sha256(_MASTER + label).digest() for label in (b"r1", b"r2", b"r3")]
        key = AesKey(hashlib.sha256(_MASTER + b"aes").digest()[:16])
        return generate_watermark(k_w, timestamps, hash_alg, frames), seeds, key

    return run


def _meter_state(aes_bits: int, mode: Mode) -> SmState:
    schedule = generate_watermark(_MASTER, (60, 120), HashAlg.SHA256)
    key = AesKey(hashlib.sha512(_MASTER).digest()[: aes_bits // 8])
    seed_r1 = hashlib.sha256(_MASTER + b"r1").digest()
    seed_r3 = hashlib.sha256(_MASTER + b"r3").digest()
    return SmState(MeterId(1), key, seed_r1, seed_r3, schedule, mode)


def iteration_workload(aes_bits: int, scheme: str) -> tuple[Callable[[], object], Callable[[], None]]:
    """One smart-meter phase-1 iteration, and the untimed reset that precedes it."""
    meter = MeterId(1)
    d1 = MeterReading(1234567, meter, 1)
    d2 = MeterReading(1234890, meter, 2)
    if scheme == "RLS":
        state = _meter_state(aes_bits, Mode.LOW_FREQUENCY)
        run = lambda: sm_step_low(state, d1, 1)  # noqa: E731
    elif scheme == "RDE":
        state = _meter_state(aes_bits, Mode.HIGH_FREQUENCY)
        run = lambda: sm_step_high(state, d1, d2, 1)  # noqa: E731
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    def reset():
        state.next_frame = 1

    return run, reset


def cmd_bench(hashes: Sequence[str] = ("sha224", "sha256", "sha512"),
              aes_bits: Sequence[int] = (128, 192, 256),
              repetitions: int = MIN_REPETITIONS,
              frames: int = DEFAULT_FRAMES,
              schemes: Sequence[str] = SCHEMES) -> BenchReport:
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"repetitions must be at least {MIN_REPETITIONS}")
    if frames < 1:
        raise ValueError("frames must be at least 1")
    algs = [HashAlg.parse(h) for h in hashes]
    for bits in aes_bits:
        if bits not in (128, 192, 256):
            raise ValueError(f"unsupported AES key size {bits}")

    report = BenchReport(repetitions, frames, host=host_descriptor())
    init_samples = _interleaved({a: init_workload(a, frames) for a in algs}, repetitions)
    for a in algs:
        report.init_time[a.value] = Timing.from_ns(init_samples[a])

    runs, resets = {}, {}
    for bits in aes_bits:
        for scheme in schemes:
            runs[bits, scheme], resets[bits, scheme] = iteration_workload(bits, scheme)
    iter_samples = _interleaved(runs, repetitions, resets)
    for key, samples in iter_samples.items():
        report.iter_time[key] = Timing.from_ns(samples)
    return report
