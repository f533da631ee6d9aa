"""Scenario configuration, meter trace ingestion and ground truth.

Config files are flat JSON objects; nested settings use dotted keys::

    {
      "mode": "low",
      "n": 5,
      "m": 24,
      "hash": "sha256",
      "aes_bits": 128,
      "scale": 1000,
      "master_seed": 7,
      "data": "synthetic",
      "synthetic.seed": 11,
      "synthetic.max_energy": "2.5",
      "adversary.action": "modify_add",
      "adversary.link": "da_cc",
      "adversary.delta": "odd"
    }

Trace CSVs carry a header row ``meter_id,timestamp,energy``.  Each meter's
rows are sorted by timestamp and assigned to frames 1..m in that order.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from functools import cached_property
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from .adversary import ACTIONS, AdversaryScript, BitFlip, InjectForged, Link, ModifyAdd
from .core import (
    HIGH_FREQUENCY_STEP,
    LOW_FREQUENCY_STEP,
    EpochConfig,
    MeterId,
    MeterReading,
    Mode,
    Registry,
    fixed_point_encode,
)
from .errors import ConfigInvalid, MissingCell, NegativeReading, Overflow, ParseError

CSV_COLUMNS = ("meter_id", "timestamp", "energy")

# Per-frame upper bounds (energy units) for the two synthetic cadences.
CADENCE_PRESETS = {
    "low": {"step": LOW_FREQUENCY_STEP, "max_energy": Decimal("5.0")},
    "high": {"step": HIGH_FREQUENCY_STEP, "max_energy": Decimal("0.1")},
}


@dataclass(frozen=True)
class TraceTable:
    """Raw readings of every registered meter (plus the dummy) over one epoch."""

    registry: Registry
    scale: int
    readings: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.readings) != self.registry.effective_n:
            raise ValueError("one row of readings per registered meter is required")
        widths = {len(row) for row in self.readings}
        if len(widths) != 1:
            raise ValueError("trace must be a complete rectangle")
        if any(v < 0 for row in self.readings for v in row):
            raise NegativeReading("trace contains negative readings")

    @property
    def m(self) -> int:
        return len(self.readings[0])

    def reading(self, meter: MeterId | int, frame: int) -> MeterReading:
        index = int(meter)
        return MeterReading(self.readings[index - 1][frame - 1], self.registry.meters[index - 1], frame)

    @cached_property
    def ground_truth(self) -> tuple[int, ...]:
        """Per-frame raw sums over all meters."""
        return tuple(sum(col) for col in zip(*self.readings))


def _table(epoch: EpochConfig, rows: list[list[int]]) -> TraceTable:
    registry = epoch.registry()
    if registry.dummy is not None:
        rows = rows + [[0] * epoch.m]
    return TraceTable(registry, epoch.scale, tuple(tuple(r) for r in rows))


def load_csv(path: Union[str, os.PathLike], epoch: EpochConfig) -> TraceTable:
    """Read ``meter_id,timestamp,energy`` rows for meters ``1..n_registered``.

    Rows past the first ``m`` of a meter are outside the epoch and ignored.
    """
    per_meter: dict[int, list[tuple[float, int, int]]] = {i: [] for i in range(1, epoch.n_registered + 1)}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(f.strip() for f in reader.fieldnames) != CSV_COLUMNS:
            raise ParseError(f"expected header {','.join(CSV_COLUMNS)}", row=1)
        for lineno, row in enumerate(reader, start=2):
            row = {k.strip(): (v or "").strip() for k, v in row.items() if k is not None}
            try:
                meter = int(row["meter_id"])
            except ValueError:
                raise ParseError(f"bad meter id {row['meter_id']!r}", lineno, "meter_id") from None
            if meter not in per_meter:
                raise ParseError(f"meter {meter} is not registered", lineno, "meter_id")
            try:
                ts = float(row["timestamp"])
            except ValueError:
                raise ParseError(f"bad timestamp {row['timestamp']!r}", lineno, "timestamp") from None
            try:
                value = Decimal(row["energy"])
            except InvalidOperation:
                raise ParseError(f"bad energy value {row['energy']!r}", lineno, "energy") from None
            if not value.is_finite():
                raise ParseError(f"bad energy value {row['energy']!r}", lineno, "energy")
            try:
                raw = fixed_point_encode(value, epoch.scale)
            except NegativeReading as exc:
                raise NegativeReading(f"row {lineno}: {exc}") from None
            except Overflow as exc:
                raise Overflow(f"row {lineno}: {exc}") from None
            per_meter[meter].append((ts, lineno, raw))

    rows = []
    for meter, entries in per_meter.items():
        entries.sort()
        if len(entries) < epoch.m:
            raise MissingCell(meter, len(entries) + 1)
        rows.append([raw for _, _, raw in entries[: epoch.m]])
    return _table(epoch, rows)


@dataclass(frozen=True)
class SyntheticParams:
    max_energy: Decimal = Decimal("5.0")
    distribution: str = "uniform"
    constant: Decimal = Decimal(0)

    def __post_init__(self):
        object.__setattr__(self, "max_energy", Decimal(str(self.max_energy)))
        object.__setattr__(self, "constant", Decimal(str(self.constant)))
        if self.distribution not in ("uniform", "constant"):
            raise ConfigInvalid(f"unknown distribution {self.distribution!r}")
        if self.max_energy < 0 or self.constant < 0:
            raise ConfigInvalid("synthetic energies must be non-negative")

    @classmethod
    def preset(cls, cadence: str) -> "SyntheticParams":
        return cls(max_energy=CADENCE_PRESETS[cadence]["max_energy"])


def synth_trace(seed: int, epoch: EpochConfig, params: SyntheticParams | None = None) -> TraceTable:
    """Seeded synthetic readings, uniform on ``[0, max_energy]`` at the epoch's resolution."""
    if params is None:
        params = SyntheticParams.preset(epoch.mode.value)
    n, m = epoch.n_registered, epoch.m
    if params.distribution == "constant":
        raw = fixed_point_encode(params.constant, epoch.scale)
        rows = [[raw] * m for _ in range(n)]
    else:
        upper = fixed_point_encode(params.max_energy, epoch.scale)
        rng = np.random.default_rng(seed)
        rows = rng.integers(0, upper, size=(n, m), endpoint=True).tolist()
    return _table(epoch, rows)


@dataclass(frozen=True)
class CsvSource:
    path: Path


@dataclass(frozen=True)
class SyntheticSource:
    seed: int = 0
    params: Optional[SyntheticParams] = None


@dataclass(frozen=True)
class ScenarioConfig:
    epoch: EpochConfig
    data_source: Union[CsvSource, SyntheticSource] = field(default_factory=SyntheticSource)
    adversary: tuple[AdversaryScript, ...] = ()
    master_seed: int = 0
    freshness: bool = True
    out_dir: Optional[Path] = None

    def __post_init__(self):
        if isinstance(self.adversary, AdversaryScript):
            object.__setattr__(self, "adversary", (self.adversary,))

    def load_trace(self) -> TraceTable:
        if isinstance(self.data_source, CsvSource):
            trace = load_csv(self.data_source.path, self.epoch)
        else:
            trace = synth_trace(self.data_source.seed, self.epoch, self.data_source.params)
        if trace.m != self.epoch.m or trace.registry != self.epoch.registry():
            raise ConfigInvalid("trace shape does not match the epoch")
        return trace


_KNOWN_KEYS = {
    "mode", "n", "m", "hash", "aes_bits", "scale", "timestamps", "master_seed", "freshness",
    "data", "synthetic.seed", "synthetic.max_energy", "synthetic.distribution", "synthetic.constant",
    "adversary.action", "adversary.link", "adversary.meters", "adversary.frames", "adversary.bit",
    "adversary.delta", "adversary.payload", "adversary.seed", "out_dir",
}


def _int(cfg: dict, key: str, default: Any = None) -> Any:
    value = cfg.get(key, default)
    if value is None or isinstance(value, bool):
        if value is None:
            return None
        raise ConfigInvalid(f"{key} must be an integer")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{key} must be an integer, got {value!r}") from None


def _int_set(cfg: dict, key: str) -> Optional[frozenset]:
    value = cfg.get(key, "all")
    if value == "all":
        return None
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        raise ConfigInvalid(f"{key} must be \"all\" or a list of integers")
    return frozenset(value)


def parse_adversary(cfg: dict) -> Optional[AdversaryScript]:
    name = cfg.get("adversary.action", "none")
    if name in (None, "none"):
        return None
    if name not in ACTIONS:
        raise ConfigInvalid(f"unknown adversary action {name!r}; expected one of {sorted(ACTIONS)}")
    try:
        link = Link(cfg.get("adversary.link", "da_cc"))
    except ValueError:
        raise ConfigInvalid(f"unknown link {cfg.get('adversary.link')!r}") from None
    try:
        if name == "bitflip":
            bit = cfg.get("adversary.bit", "random")
            action = BitFlip(None if bit == "random" else _int(cfg, "adversary.bit"))
        elif name == "modify_add":
            delta = cfg.get("adversary.delta", 1)
            action = ModifyAdd(delta if isinstance(delta, str) else _int(cfg, "adversary.delta"))
        elif name == "inject":
            payload = cfg.get("adversary.payload")
            action = InjectForged(None if payload is None else bytes.fromhex(payload))
        else:
            action = ACTIONS[name]()
    except ValueError as exc:
        raise ConfigInvalid(str(exc)) from None
    return AdversaryScript(action, link, _int_set(cfg, "adversary.meters"),
                           _int_set(cfg, "adversary.frames"), _int(cfg, "adversary.seed", 0))


def scenario_from_mapping(cfg: dict, base_dir: Path | None = None) -> ScenarioConfig:
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a flat key/value object")
    unknown = set(cfg) - _KNOWN_KEYS
    if unknown:
        raise ConfigInvalid(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key in ("mode", "n", "m"):
        if key not in cfg:
            raise ConfigInvalid(f"missing required key {key!r}")
    try:
        epoch = EpochConfig(
            mode=Mode.parse(cfg["mode"]),
            n_registered=_int(cfg, "n"),
            m=_int(cfg, "m"),
            hash_alg=cfg.get("hash", "sha256"),
            aes_bits=_int(cfg, "aes_bits", 128),
            scale=_int(cfg, "scale", 1000),
            timestamps=tuple(cfg.get("timestamps", ())),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(str(exc)) from None

    data = cfg.get("data", "synthetic")
    if data == "synthetic":
        if "synthetic.distribution" in cfg or "synthetic.max_energy" in cfg or "synthetic.constant" in cfg:
            preset = SyntheticParams.preset(epoch.mode.value)
            params = SyntheticParams(
                max_energy=cfg.get("synthetic.max_energy", preset.max_energy),
                distribution=cfg.get("synthetic.distribution", "uniform"),
                constant=cfg.get("synthetic.constant", 0),
            )
        else:
            params = None
        source: Union[CsvSource, SyntheticSource] = SyntheticSource(_int(cfg, "synthetic.seed", 0), params)
    elif isinstance(data, str):
        path = Path(data)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        source = CsvSource(path)
    else:
        raise ConfigInvalid("data must be \"synthetic\" or a CSV path")

    freshness = cfg.get("freshness", True)
    if not isinstance(freshness, bool):
        raise ConfigInvalid("freshness must be true or false")
    adversary = parse_adversary(cfg)
    out_dir = cfg.get("out_dir")
    return ScenarioConfig(
        epoch=epoch,
        data_source=source,
        adversary=() if adversary is None else (adversary,),
        master_seed=_int(cfg, "master_seed", 0),
        freshness=freshness,
        out_dir=None if out_dir is None else Path(out_dir),
    )


def load_config(path: Union[str, os.PathLike]) -> ScenarioConfig:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path} is not valid JSON: {exc}") from None
    return scenario_from_mapping(cfg, base_dir=path.parent)
