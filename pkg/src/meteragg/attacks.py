"""Detection-rate evaluation for each attacker class."""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Optional

from scipy.stats import binomtest

from .adversary import AdversaryScript, BitFlip, InjectForged, Link, ModifyAdd, ReplayPrevious
from .core import EpochConfig, Mode
from .netsim import RunReport, eavesdrop_probe, run_epoch
from .scenario_io import ScenarioConfig, SyntheticParams, SyntheticSource

MIN_TRIALS = 1000


@dataclass(frozen=True)
class AttackResult:
    name: str
    metric: str
    trials: int
    hits: int
    expected: Optional[float]

    @property
    def rate(self) -> float:
        return self.hits / self.trials if self.trials else 0.0

    @property
    def ci(self) -> tuple[float, float]:
        if not self.trials:
            return (0.0, 1.0)
        ci = binomtest(self.hits, self.trials).proportion_ci(confidence_level=0.95, method="exact")
        return float(ci.low), float(ci.high)

    def to_dict(self) -> dict:
        low, high = self.ci
        return {"attack": self.name, "metric": self.metric, "trials": self.trials, "hits": self.hits,
                "rate": self.rate, "ci95_low": low, "ci95_high": high, "expected": self.expected}


def _epoch_for(base: EpochConfig, frames: int) -> EpochConfig:
    if base.mode is Mode.HIGH_FREQUENCY and frames % 2:
        frames += 1
    return replace(base, m=frames, timestamps=())


def _detection(name: str, report: RunReport, expected: Optional[float]) -> AttackResult:
    return AttackResult(name, "detected / attacked frames", report.frames_attacked,
                        report.frames_detected, expected)


# (name, action, link, freshness, expected detection rate for a low-frequency epoch)
ATTACKS = (
    ("replay (freshness on)", ReplayPrevious(), Link.DA_TO_CC, True, 1.0),
    ("replay (freshness off)", ReplayPrevious(), Link.DA_TO_CC, False, 0.5),
    ("replay sm->da (freshness off)", ReplayPrevious(), Link.SM_TO_DA, False, 1.0),
    ("bit-flip (random bit)", BitFlip(), Link.DA_TO_CC, True, 1 / 64),
    ("modify-add (odd delta)", ModifyAdd("odd"), Link.DA_TO_CC, True, 1.0),
    ("modify-add (even delta)", ModifyAdd("even"), Link.DA_TO_CC, True, 0.0),
    ("modify-add (uniform 64-bit delta)", ModifyAdd("uniform"), Link.DA_TO_CC, True, 0.5),
    ("inject-forged da->cc", InjectForged(), Link.DA_TO_CC, True, 0.5),
    ("inject-forged sm->da", InjectForged(), Link.SM_TO_DA, True, 1.0),
)


def attack_eval(config: ScenarioConfig, trials: int = MIN_TRIALS, seed: int = 1) -> list[AttackResult]:
    """Run every attacker class for ``trials`` frames on the config's epoch settings.

    Expected rates hold for low-frequency epochs; in high-frequency mode the
    pair is verified as a unit and some rates differ.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be at least {MIN_TRIALS}")
    epoch = _epoch_for(config.epoch, trials)
    low = epoch.mode is Mode.LOW_FREQUENCY
    results = []

    constant = ScenarioConfig(
        epoch, SyntheticSource(seed, SyntheticParams(distribution="constant", constant=Decimal(7))),
        master_seed=config.master_seed)
    probe = eavesdrop_probe(run_epoch(constant).channels[Link.SM_TO_DA])
    results.append(AttackResult("eavesdrop (constant reading)", "distinct / observed payloads",
                                probe.payloads, probe.distinct, 1.0))

    for k, (name, action, link, freshness, expected) in enumerate(ATTACKS):
        scenario = ScenarioConfig(
            epoch, SyntheticSource(seed), (AdversaryScript(action, link, rng_seed=seed + k),),
            master_seed=config.master_seed, freshness=freshness)
        results.append(_detection(name, run_epoch(scenario), expected if low else None))
    return results


def format_results(results: list[AttackResult]) -> str:
    lines = [f"{'attack':<36} {'trials':>7} {'rate':>7}  {'95% CI':<17} {'expected':>8}"]
    for r in results:
        low, high = r.ci
        exp = "" if r.expected is None else f"{r.expected:.4f}"
        lines.append(f"{r.name:<36} {r.trials:>7} {r.rate:7.4f}  [{low:.4f}, {high:.4f}] {exp:>8}")
    return "\n".join(lines)


def results_csv(results: list[AttackResult]) -> str:
    buf = io.StringIO()
    rows = [r.to_dict() for r in results]
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
