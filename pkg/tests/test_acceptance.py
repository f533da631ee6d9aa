"""Acceptance checks, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import dataclasses
import random

import pytest
from scipy.stats import binomtest

from meteragg.adversary import AdversaryScript, Link, ModifyAdd, ReplayPrevious
from meteragg.bench import cmd_bench
from meteragg.core import RAW_BOUND, EpochConfig, MeterReading, Mode
from meteragg.entities import (
    CcState,
    DaState,
    SmState,
    cc_step_high,
    cc_step_low,
    da_step,
    provision,
    sm_step_high,
    sm_step_low,
)
from meteragg.netsim import eavesdrop_probe, run_epoch
from meteragg.scenario_io import ScenarioConfig, TraceTable
from meteragg.shield import MASK64, AesKey, Stream, mask_value
from meteragg.watermark import rde_embed, rde_verify_extract


def random_trace(rng, epoch):
    """Readings drawn from one of several regimes, including values near the raw bound."""
    regime = rng.choice(["small", "wide", "near_bound", "zeros", "sparse"])
    n, m = epoch.n_registered, epoch.m

    def draw():
        if regime == "small":
            return rng.randrange(100)
        if regime == "wide":
            return rng.randrange(RAW_BOUND)
        if regime == "near_bound":
            return RAW_BOUND - 1 - rng.randrange(1000)
        if regime == "zeros":
            return 0
        return rng.choice([0, 0, 0, rng.randrange(RAW_BOUND)])

    rows = [[draw() for _ in range(m)] for _ in range(n)]
    registry = epoch.registry()
    if registry.dummy is not None:
        rows.append([0] * m)
    return TraceTable(registry, epoch.scale, tuple(map(tuple, rows)))


def test_criterion_1_end_to_end_exactness():
    """1. end-to-end exactness over 200 randomized scenarios (zero tolerance)"""
    rng = random.Random(20240601)
    seen = {"modes": set(), "parity": set()}
    for k in range(200):
        mode = rng.choice(["low", "high"])
        n = rng.randint(1, 50)
        m = rng.randint(1, 24) * 2 if mode == "high" else rng.randint(2, 48)
        epoch = EpochConfig(mode, n, m, hash_alg=rng.choice(["sha224", "sha256", "sha512"]),
                            aes_bits=rng.choice([128, 192, 256]), scale=rng.choice([1, 10, 100, 1000]))
        trace = random_trace(rng, epoch)
        report = run_epoch(ScenarioConfig(epoch, master_seed=rng.getrandbits(64)), trace)
        assert report.frames_detected == 0, (k, epoch)
        assert list(report.recovered_sums) == list(trace.ground_truth), (k, epoch)
        seen["modes"].add(mode)
        seen["parity"].add(n % 2)
    assert seen == {"modes": {"low", "high"}, "parity": {0, 1}}


def test_criterion_2_rde_round_trip_exhaustive():
    """2. RDE per-meter round trip exact for all 80,802 cases"""
    cases = 0
    for w in (0, 1):
        for d1 in range(201):
            for d2 in range(201):
                assert rde_verify_extract(*rde_embed(d1, d2, w), w, 1) == (d1, d2)
                cases += 1
    assert cases == 80_802


def parity_run(delta, seed):
    adv = (AdversaryScript(ModifyAdd(delta), Link.DA_TO_CC, rng_seed=seed),)
    return run_epoch(ScenarioConfig(EpochConfig("low", 3, 10_000), adversary=adv, master_seed=seed))


def test_criterion_3_parity_detection_law():
    """3. parity law: odd 10000/10000, even 0/10000, uniform at 0.5 inside the 95% CI"""
    odd = parity_run("odd", 31)
    assert odd.frames_attacked == odd.frames_detected == 10_000
    even = parity_run("even", 32)
    assert even.frames_attacked == 10_000 and even.frames_detected == 0
    uniform = parity_run("uniform", 33)
    assert uniform.frames_attacked == 10_000
    ci = binomtest(uniform.frames_detected, 10_000).proportion_ci(0.95, method="exact")
    print(f"uniform delta detected {uniform.frames_detected}/10000, 95% CI [{ci.low:.4f}, {ci.high:.4f}]")
    assert ci.low <= 0.5 <= ci.high


def replay_oracle(config, clean):
    """Brute-force what the control center sees when Q'_{j-1} is delivered at frame j."""
    dep = provision(config.epoch, random.Random(config.master_seed))
    cc = dep.control_center
    transcript = clean.channels[Link.DA_TO_CC].transcript
    predicted = []
    for j in range(2, config.epoch.m + 1):
        q = transcript[j - 2].value ^ mask_value(Stream.R2, cc.r2_seed, 0, j)
        r3 = sum(mask_value(Stream.R3, cc.r3_seeds[mt.index], mt.index, j) for mt in cc.registry.meters)
        v = (q - r3) & MASK64
        predicted.append(v % 2 != cc.schedule.bit(j))
    return predicted


def test_criterion_4_replay_resistance():
    """4. replay: 1000/1000 rejected with freshness; parity-oracle agreement without"""
    epoch = EpochConfig("low", 3, 1001)
    for link in Link:
        report = run_epoch(ScenarioConfig(epoch, adversary=(AdversaryScript(ReplayPrevious(), link),),
                                          master_seed=41))
        assert report.frames_attacked == 1000
        assert report.frames_detected == 1000, link

    base = ScenarioConfig(epoch, master_seed=42, freshness=False)
    clean = run_epoch(base)
    predicted = replay_oracle(base, clean)
    replayed = run_epoch(dataclasses.replace(base, adversary=(AdversaryScript(ReplayPrevious()),)))
    observed = [v.detected for v in replayed.verdicts[1:]]
    assert observed == predicted
    # the shortcut form of the same law: detected iff consecutive aggregates differ in LSB
    q = [msg.value for msg in clean.channels[Link.DA_TO_CC].transcript]
    assert predicted == [(q[j - 1] ^ q[j]) & 1 == 1 for j in range(1, 1001)]
    print(f"replay without freshness: {sum(observed)}/1000 detected, oracle agrees frame by frame")


@pytest.mark.parametrize("mode", ["low", "high"])
def test_criterion_5_zero_communication_overhead(mode):
    """5. payloads are 16 B (SM->DA) and 8 B (DA->CC); message counts equal the plaintext baseline"""
    for value in (0, 1, 2**20, 2**39):
        epoch = EpochConfig(mode, 4, 4, scale=1)
        registry = epoch.registry()
        trace = TraceTable(registry, 1, ((value,) * 4,) * 4 + ((0,) * 4,))
        report = run_epoch(ScenarioConfig(epoch, master_seed=value), trace)
        assert report.exact
        sm = report.channels[Link.SM_TO_DA].transcript
        da = report.channels[Link.DA_TO_CC].transcript
        assert {len(m.payload) for m in sm} == {16} and {len(m.to_bytes()) for m in sm} == {26}
        assert {len(m.payload) for m in da} == {8} and {len(m.to_bytes()) for m in da} == {18}
        for frame in range(1, 5):
            assert sum(m.frame == frame for m in sm) == registry.effective_n
            assert sum(m.frame == frame for m in da) == 1


def test_criterion_6_confidentiality_probe():
    """6. constant reading over 1000 frames gives 1000 distinct SM->DA payloads"""
    epoch = EpochConfig("low", 1, 1000, scale=1)
    trace = TraceTable(epoch.registry(), 1, ((7,) * 1000,))
    report = run_epoch(ScenarioConfig(epoch, master_seed=6), trace)
    verdict = eavesdrop_probe(report.channels[Link.SM_TO_DA])
    assert verdict.payloads == 1000
    assert verdict.distinct == 1000 and verdict.collisions == 0


@pytest.mark.slow
def test_criterion_7_benchmark_orderings():
    """7. bench orderings: init sha512 > sha256; iter aes256 >= aes192 >= aes128 for RLS and RDE"""
    report = cmd_bench(repetitions=1000)
    print()
    print(report.format_table())
    init = {k: v.mean_ms for k, v in report.init_time.items()}
    assert init["sha512"] > init["sha256"]
    for scheme in ("RLS", "RDE"):
        it = {bits: report.iter_time[bits, scheme].mean_ms for bits in (128, 192, 256)}
        assert it[256] >= it[192] >= it[128], (scheme, it)


def _byte_values(obj, out):
    """Every bytes object reachable from an entity state."""
    if isinstance(obj, (bytes, bytearray)):
        out.add(bytes(obj))
    elif isinstance(obj, AesKey):
        out.add(obj.key)
    elif isinstance(obj, dict):
        for v in obj.values():
            _byte_values(v, out)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _byte_values(v, out)
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        for f in dataclasses.fields(obj):
            _byte_values(getattr(obj, f.name), out)
    return out


@pytest.mark.parametrize("mode", ["low", "high"])
def test_criterion_8_knowledge_partition(mode):
    """8. DA and CC built from their declared secrets only, and the aggregate still verifies"""
    rng = random.Random(8)
    epoch = EpochConfig(mode, 4, 2, scale=1)
    registry = epoch.registry()
    k_w = rng.randbytes(32)
    r2 = rng.randbytes(32)
    aes = {mt.index: AesKey(rng.randbytes(16)) for mt in registry.meters}
    r1 = {mt.index: rng.randbytes(32) for mt in registry.meters}
    r3 = {mt.index: rng.randbytes(32) for mt in registry.meters}

    da = DaState(meter_keys=aes, r1_seeds=r1, r2_seed=r2, mode=epoch.mode)
    cc = CcState.from_secrets(registry, k_w, epoch.timestamps, epoch.hash_alg, r3, r2, epoch.mode, 1)
    schedule = cc.schedule
    meters = {i: SmState(mt, aes[i], r1[i], r3[i], schedule, epoch.mode)
              for i, mt in enumerate(registry.meters, start=1)}

    readings = {i: (3 * i, 5 * i) if not meters[i].meter.is_dummy else (0, 0) for i in meters}
    if epoch.mode is Mode.LOW_FREQUENCY:
        out = []
        for f in (1, 2):
            msgs = [sm_step_low(sm, _reading(sm, readings[i][f - 1], f), f) for i, sm in meters.items()]
            out.append(cc_step_low(cc, da_step(da, msgs)).raw)
    else:
        pairs = [sm_step_high(sm, _reading(sm, readings[i][0], 1), _reading(sm, readings[i][1], 2), 1)
                 for i, sm in meters.items()]
        q1 = da_step(da, [p[0] for p in pairs])
        q2 = da_step(da, [p[1] for p in pairs])
        out = [a.raw for a in cc_step_high(cc, q1, q2)]
    assert out == [sum(d[0] for d in readings.values()), sum(d[1] for d in readings.values())]

    da_bytes, cc_bytes = _byte_values(da, set()), _byte_values(cc, set())
    assert not da_bytes & ({k_w} | set(r3.values()))
    assert not cc_bytes & ({a.key for a in aes.values()} | set(r1.values()) | {k_w})
    with pytest.raises(AttributeError):
        da.r3_seeds = r3
    with pytest.raises(AttributeError):
        cc.meter_keys = aes


def _reading(sm, raw, frame):
    return MeterReading(raw, sm.meter, frame)
