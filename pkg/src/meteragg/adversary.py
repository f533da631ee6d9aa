"""Attacker actions on the public links.

Actions only ever touch messages in flight.  Smart meters are trusted and
tamper-proof, and initialization traffic is out of band, so neither is
reachable from here.  A man-in-the-middle is several scripts on one link
(intercept, modify, forward), not a separate mechanism.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, replace
from typing import Optional, Union

from .entities import ProtocolMessage


class Link(enum.Enum):
    SM_TO_DA = "sm_da"
    DA_TO_CC = "da_cc"


def _int_payload(msg: ProtocolMessage, value: int) -> ProtocolMessage:
    size = len(msg.payload)
    return replace(msg, payload=(value % (1 << (8 * size))).to_bytes(size, "big"))


@dataclass(frozen=True)
class BitFlip:
    """Flip one payload bit; bit 0 is the least significant bit of the payload integer."""

    bit: Optional[int] = None

    def apply(self, msg, previous, rng: random.Random):
        width = 8 * len(msg.payload)
        bit = rng.randrange(width) if self.bit is None else self.bit
        if not 0 <= bit < width:
            raise ValueError(f"bit {bit} outside a {width}-bit payload")
        return _int_payload(msg, msg.value ^ (1 << bit))


@dataclass(frozen=True)
class ReplayPrevious:
    """Substitute the previous message the same sender put on the link."""

    def apply(self, msg, previous, rng):
        return msg if previous is None else previous


@dataclass(frozen=True)
class Drop:
    def apply(self, msg, previous, rng):
        return None


@dataclass(frozen=True)
class InjectForged:
    """Replace the payload, keeping a fresh header; random bytes when no payload is given."""

    payload: Optional[bytes] = None

    def apply(self, msg, previous, rng: random.Random):
        size = len(msg.payload)
        payload = rng.randbytes(size) if self.payload is None else self.payload
        if len(payload) != size:
            raise ValueError(f"forged payload must be {size} bytes on this link")
        return replace(msg, payload=payload)


DELTA_KINDS = ("odd", "even", "uniform")


@dataclass(frozen=True)
class ModifyAdd:
    """Add ``delta`` to the payload integer, wrapping at the payload width.

    ``delta`` may be a fixed integer or one of ``"odd"``, ``"even"`` (nonzero)
    or ``"uniform"``, drawn afresh for every message.
    """

    delta: Union[int, str] = 1

    def __post_init__(self):
        if isinstance(self.delta, str) and self.delta not in DELTA_KINDS:
            raise ValueError(f"delta must be an integer or one of {DELTA_KINDS}")

    def draw(self, rng: random.Random) -> int:
        if not isinstance(self.delta, str):
            return self.delta
        r = rng.getrandbits(64)
        if self.delta == "odd":
            return r | 1
        if self.delta == "even":
            return (r & ~1) or 2
        return r

    def apply(self, msg, previous, rng: random.Random):
        return _int_payload(msg, msg.value + self.draw(rng))


Action = Union[BitFlip, ReplayPrevious, Drop, InjectForged, ModifyAdd]


@dataclass(frozen=True)
class AdversaryScript:
    action: Action
    link: Link = Link.DA_TO_CC
    meters: Optional[frozenset] = None
    frames: Optional[frozenset] = None
    rng_seed: int = 0

    def targets(self, link: Link, msg: ProtocolMessage, frame: int) -> bool:
        if link is not self.link:
            return False
        if self.frames is not None and frame not in self.frames:
            return False
        if self.meters is not None and link is Link.SM_TO_DA and msg.sender not in self.meters:
            return False
        return True


ACTIONS = {
    "bitflip": BitFlip,
    "replay": ReplayPrevious,
    "drop": Drop,
    "inject": InjectForged,
    "modify_add": ModifyAdd,
}
