"""Deterministic message bus and epoch runner with adversary hooks."""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .adversary import AdversaryScript, Link
from .core import Mode, frame_pairs
from .entities import (
    Aggregate,
    Deployment,
    ProtocolMessage,
    cc_step_high,
    cc_step_low,
    da_step,
    provision,
    sm_step_high,
    sm_step_low,
)
from .errors import IntegrityError
from .scenario_io import ScenarioConfig, TraceTable

OK = "ok"
MISSING = "missing"


class Channel:
    """FIFO link between two entities, with optional attacker scripts.

    Every message that actually goes out is kept in ``transcript`` so that
    eavesdropping can be evaluated after the run.
    """

    def __init__(self, link: Link, adversaries: Sequence[AdversaryScript] = ()):
        self.link = link
        self.adversaries = [a for a in adversaries if a.link is link]
        self._rngs = [random.Random(a.rng_seed) for a in self.adversaries]
        self.queue: deque[ProtocolMessage] = deque()
        self.transcript: list[ProtocolMessage] = []
        self._previous: dict[int, ProtocolMessage] = {}

    def send(self, msg: ProtocolMessage, frame: int) -> bool:
        """Put ``msg`` on the link during ``frame``; True if the attacker altered it."""
        out: Optional[ProtocolMessage] = msg
        for script, rng in zip(self.adversaries, self._rngs):
            if out is not None and script.targets(self.link, msg, frame):
                out = script.action.apply(out, self._previous.get(msg.sender), rng)
        self._previous[msg.sender] = msg
        if out is not None:
            self.queue.append(out)
            self.transcript.append(out)
        return out != msg

    def drain(self) -> list[ProtocolMessage]:
        out = list(self.queue)
        self.queue.clear()
        return out


@dataclass(frozen=True)
class FrameVerdict:
    frame: int
    attacked: bool
    verdict: str
    recovered: Optional[int]
    truth: int

    @property
    def detected(self) -> bool:
        return self.verdict != OK

    @property
    def corrupted_undetected(self) -> bool:
        return self.verdict == OK and self.recovered != self.truth


@dataclass
class RunReport:
    mode: str
    n_registered: int
    effective_n: int
    scale: int
    verdicts: list[FrameVerdict]
    messages: dict[str, int]
    channels: dict[Link, Channel] = field(default_factory=dict, repr=False, compare=False)

    @property
    def frames_total(self) -> int:
        return len(self.verdicts)

    @property
    def frames_attacked(self) -> int:
        return sum(v.attacked for v in self.verdicts)

    @property
    def frames_detected(self) -> int:
        return sum(v.detected for v in self.verdicts)

    @property
    def frames_corrupted_undetected(self) -> int:
        return sum(v.corrupted_undetected for v in self.verdicts)

    @property
    def false_positives(self) -> int:
        return sum(v.detected and not v.attacked for v in self.verdicts)

    @property
    def recovered_sums(self) -> list[Optional[int]]:
        return [v.recovered for v in self.verdicts]

    @property
    def ground_truth(self) -> list[int]:
        return [v.truth for v in self.verdicts]

    @property
    def exact(self) -> bool:
        return all(v.recovered == v.truth for v in self.verdicts)

    def verdict_counts(self) -> dict[str, int]:
        return dict(sorted(Counter(v.verdict for v in self.verdicts).items()))

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_registered": self.n_registered,
            "effective_n": self.effective_n,
            "scale": self.scale,
            "frames_total": self.frames_total,
            "frames_attacked": self.frames_attacked,
            "frames_detected": self.frames_detected,
            "frames_corrupted_undetected": self.frames_corrupted_undetected,
            "false_positives": self.false_positives,
            "verdict_counts": self.verdict_counts(),
            "messages": dict(self.messages),
            "recovered_sums": self.recovered_sums,
            "ground_truth": self.ground_truth,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frame", "attacked", "verdict", "recovered", "truth"])
        for v in self.verdicts:
            w.writerow([v.frame, int(v.attacked), v.verdict, "" if v.recovered is None else v.recovered, v.truth])
        return buf.getvalue()


class _Run:
    def __init__(self, config: ScenarioConfig, trace: TraceTable, deployment: Deployment):
        self.trace = trace
        self.dep = deployment
        self.sm_da = Channel(Link.SM_TO_DA, config.adversary)
        self.da_cc = Channel(Link.DA_TO_CC, config.adversary)
        self.verdicts: list[FrameVerdict] = []
        self.messages = Counter()

    def _send_all(self, channel: Channel, msgs: Iterable[ProtocolMessage], frame: int) -> bool:
        altered = False
        for msg in msgs:
            self.messages[channel.link.value] += 1
            altered |= channel.send(msg, frame)
        return altered

    def _aggregate(self, frame: int, msgs: list[ProtocolMessage]):
        """DA processing of one frame; returns (forwarded message or error kind, altered)."""
        altered = self._send_all(self.sm_da, msgs, frame)
        try:
            q = da_step(self.dep.aggregator, self.sm_da.drain())
        except IntegrityError as exc:
            return exc.kind, altered
        altered |= self._send_all(self.da_cc, [q], frame)
        return None, altered

    def _record(self, frames, attacked: bool, verdict: str, recovered) -> None:
        truth = self.trace.ground_truth
        for f, r in zip(frames, recovered):
            self.verdicts.append(FrameVerdict(f, attacked, verdict, r, truth[f - 1]))

    def run_low(self) -> None:
        cc = self.dep.control_center
        for j in range(1, self.trace.m + 1):
            msgs = [sm_step_low(sm, self.trace.reading(i, j), j) for i, sm in self.dep.meters.items()]
            error, altered = self._aggregate(j, msgs)
            delivered = self.da_cc.drain()
            if error is None and not delivered:
                error = MISSING
            if error is not None:
                cc.expected_frame += 1
                self._record([j], altered, error, [None])
                continue
            try:
                agg: Aggregate = cc_step_low(cc, delivered[0])
            except IntegrityError as exc:
                self._record([j], altered, exc.kind, [None])
            else:
                self._record([j], altered, OK, [agg.raw])

    def run_high(self) -> None:
        cc = self.dep.control_center
        for pair, (f1, f2) in enumerate(frame_pairs(self.trace.m), start=1):
            firsts, seconds = [], []
            for i, sm in self.dep.meters.items():
                a, b = sm_step_high(sm, self.trace.reading(i, f1), self.trace.reading(i, f2), pair)
                firsts.append(a)
                seconds.append(b)
            err1, alt1 = self._aggregate(f1, firsts)
            err2, alt2 = self._aggregate(f2, seconds)
            altered = alt1 or alt2
            delivered = self.da_cc.drain()
            error = err1 or err2
            if error is None and len(delivered) != 2:
                error = MISSING
            if error is not None:
                cc.expected_frame += 2
                self._record([f1, f2], altered, error, [None, None])
                continue
            try:
                a1, a2 = cc_step_high(cc, delivered[0], delivered[1])
            except IntegrityError as exc:
                self._record([f1, f2], altered, exc.kind, [None, None])
            else:
                self._record([f1, f2], altered, OK, [a1.raw, a2.raw])


def run_epoch(config: ScenarioConfig, trace: TraceTable | None = None) -> RunReport:
    """Initialize one epoch and push every frame through SM -> DA -> CC.

    In high-frequency mode the pair is the unit of verification: altering
    either message of a pair marks both frames attacked, and a declined pair
    declines both frames.
    """
    epoch = config.epoch
    if trace is None:
        trace = config.load_trace()
    deployment = provision(epoch, random.Random(config.master_seed), freshness=config.freshness)
    run = _Run(config, trace, deployment)
    if epoch.mode is Mode.LOW_FREQUENCY:
        run.run_low()
    else:
        run.run_high()
    return RunReport(
        mode=epoch.mode.value,
        n_registered=epoch.n_registered,
        effective_n=epoch.effective_n,
        scale=epoch.scale,
        verdicts=run.verdicts,
        messages=dict(run.messages),
        channels={Link.SM_TO_DA: run.sm_da, Link.DA_TO_CC: run.da_cc},
    )


@dataclass(frozen=True)
class LeakageVerdict:
    payloads: int
    distinct: int

    @property
    def collisions(self) -> int:
        return self.payloads - self.distinct

    @property
    def passed(self) -> bool:
        return self.collisions == 0


def eavesdrop_probe(channel: Channel) -> LeakageVerdict:
    """Count repeated payloads among everything an eavesdropper saw on ``channel``.

    Each frame and meter draws fresh masks, so even a constant reading must
    never produce the same payload twice.
    """
    payloads = [m.payload for m in channel.transcript]
    return LeakageVerdict(len(payloads), len(set(payloads)))
