import random

import pytest

from meteragg import entities
from meteragg.core import Mode, build_registry
from meteragg.entities import CcState, DaState, SmState
from meteragg.shield import AesKey
from meteragg.watermark import WatermarkSchedule


@pytest.fixture
def zero_masks(monkeypatch):
    """Force every R1/R2/R3 draw inside the entities to zero."""
    monkeypatch.setattr(entities, "mask_value", lambda *args, **kwargs: 0)


def make_states(n_registered, bits, mode=Mode.LOW_FREQUENCY, seed=0, aes_bits=128, scale=1,
                freshness=True):
    """Hand-built entity states with a chosen watermark schedule and random secrets."""
    rng = random.Random(seed)
    registry = build_registry(n_registered)
    schedule = WatermarkSchedule(tuple(bits))
    keys, r1, r3, meters = {}, {}, {}, {}
    r2 = rng.randbytes(32)
    for meter in registry.meters:
        i = meter.index
        keys[i] = AesKey(rng.randbytes(aes_bits // 8))
        r1[i] = rng.randbytes(32)
        r3[i] = rng.randbytes(32)
        meters[i] = SmState(meter, keys[i], r1[i], r3[i], schedule, mode)
    da = DaState(dict(keys), dict(r1), r2, mode, freshness)
    cc = CcState(registry, dict(r3), r2, schedule, mode, scale, freshness)
    return registry, meters, da, cc


# ---------------------------------------------------------------------------
# one pass/fail line per acceptance criterion at the end of the run

_acceptance = {}


def pytest_runtest_makereport(item, call):
    if item.module.__name__.endswith("test_acceptance") and call.when == "call":
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        callspec = getattr(item, "callspec", None)
        if callspec is not None:
            doc = f"{doc} [{callspec.id}]"
        _acceptance[item.name] = (call.excinfo is None, doc)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, (passed, doc) in sorted(_acceptance.items()):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {doc}")
