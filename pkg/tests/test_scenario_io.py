import json
from decimal import Decimal

import pytest
from hypothesis import given, settings, strategies as st

from meteragg.adversary import BitFlip, Link, ModifyAdd
from meteragg.core import EpochConfig, Mode
from meteragg.errors import ConfigInvalid, MissingCell, NegativeReading, Overflow, ParseError
from meteragg.netsim import run_epoch
from meteragg.scenario_io import (
    CsvSource,
    ScenarioConfig,
    SyntheticParams,
    load_config,
    load_csv,
    scenario_from_mapping,
    synth_trace,
)

HEADER = "meter_id,timestamp,energy\n"


def write(tmp_path, body, name="trace.csv"):
    path = tmp_path / name
    path.write_text(HEADER + body)
    return path


def test_csv_two_by_two(tmp_path):
    path = write(tmp_path, "1,0,1.5\n1,3600,2\n2,0,0.25\n2,3600,0\n")
    trace = load_csv(path, EpochConfig("low", 2, 2))
    assert trace.readings == ((1500, 2000), (250, 0), (0, 0))
    assert trace.registry.effective_n == 3
    assert trace.ground_truth == (1750, 2000)


def test_csv_rows_sorted_by_timestamp_and_truncated(tmp_path):
    path = write(tmp_path, "1,7200,3\n1,0,1\n1,3600,2\n1,10800,9\n")
    assert load_csv(path, EpochConfig("low", 1, 3, scale=1)).readings == ((1, 2, 3),)


def test_csv_missing_cell(tmp_path):
    path = write(tmp_path, "1,0,1\n1,1,1\n2,0,1\n")
    with pytest.raises(MissingCell) as exc:
        load_csv(path, EpochConfig("low", 2, 2))
    assert (exc.value.meter, exc.value.frame) == (2, 2)


def test_csv_negative_value(tmp_path):
    path = write(tmp_path, "1,0,-1.0\n")
    with pytest.raises(NegativeReading, match="row 2"):
        load_csv(path, EpochConfig("low", 1, 1))


def test_csv_overflow(tmp_path):
    path = write(tmp_path, "1,0,2000000000\n")
    with pytest.raises(Overflow):
        load_csv(path, EpochConfig("low", 1, 1))


@pytest.mark.parametrize("line, column", [("x,0,1", "meter_id"), ("1,noon,1", "timestamp"),
                                          ("1,0,abc", "energy"), ("1,0,nan", "energy"),
                                          ("5,0,1", "meter_id")])
def test_csv_parse_errors_carry_position(tmp_path, line, column):
    path = write(tmp_path, "1,0,1\n" + line + "\n")
    with pytest.raises(ParseError) as exc:
        load_csv(path, EpochConfig("low", 1, 1))
    assert exc.value.row == 3 and exc.value.column == column


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("meter,ts,kwh\n1,0,1\n")
    with pytest.raises(ParseError):
        load_csv(path, EpochConfig("low", 1, 1))


def test_synthetic_is_deterministic_and_bounded():
    epoch = EpochConfig("high", 4, 48)
    a = synth_trace(3, epoch)
    assert a == synth_trace(3, epoch)
    assert a != synth_trace(4, epoch)
    assert a.registry.effective_n == 5
    assert a.readings[-1] == (0,) * 48
    assert max(max(row) for row in a.readings) <= 100


def test_synthetic_constant():
    trace = synth_trace(0, EpochConfig("low", 3, 5), SyntheticParams(distribution="constant", constant=7))
    assert trace.readings == ((7000,) * 5,) * 3


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 20), st.integers(1, 30), st.integers(0, 2**32))
def test_synthetic_shape_property(n, m, seed):
    trace = synth_trace(seed, EpochConfig("low", n, m))
    assert trace.registry.effective_n % 2 == 1
    assert len(trace.readings) == trace.registry.effective_n
    assert trace.m == m
    assert all(0 <= v <= 5000 for row in trace.readings for v in row)


def test_synthetic_params_validation():
    with pytest.raises(ConfigInvalid):
        SyntheticParams(distribution="normal")
    with pytest.raises(ConfigInvalid):
        SyntheticParams(max_energy=Decimal(-1))


def test_csv_trace_drives_exact_run(tmp_path):
    body = "".join(f"{i},{60 * j},{i * j / 10}\n" for i in (1, 2, 3, 4) for j in range(6))
    path = write(tmp_path, body)
    cfg = ScenarioConfig(EpochConfig("high", 4, 6), CsvSource(path))
    report = run_epoch(cfg)
    assert report.exact
    assert tuple(report.ground_truth) == tuple(sum(i * j * 100 for i in (1, 2, 3, 4)) for j in range(6))


def test_config_round_trip(tmp_path):
    cfg = {"mode": "rde", "n": 5, "m": 8, "hash": "sha-512", "aes_bits": 256, "scale": 100,
           "master_seed": 7, "synthetic.seed": 2, "synthetic.max_energy": "0.5",
           "adversary.action": "modify_add", "adversary.delta": "odd", "adversary.frames": [1, 2],
           "freshness": False}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    sc = load_config(path)
    assert sc.epoch.mode is Mode.HIGH_FREQUENCY
    assert sc.epoch.hash_alg.bits == 512 and sc.epoch.aes_bits == 256
    assert sc.data_source.params.max_energy == Decimal("0.5")
    assert not sc.freshness and sc.master_seed == 7
    (adv,) = sc.adversary
    assert adv.action == ModifyAdd("odd") and adv.link is Link.DA_TO_CC
    assert adv.frames == frozenset({1, 2}) and adv.meters is None


def test_config_csv_path_relative_to_file(tmp_path):
    write(tmp_path, "1,0,1\n")
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"mode": "low", "n": 1, "m": 1, "data": "trace.csv"}))
    sc = load_config(path)
    assert sc.data_source == CsvSource(tmp_path / "trace.csv")
    assert sc.load_trace().readings == ((1000,),)


def test_config_bitflip():
    sc = scenario_from_mapping({"mode": "low", "n": 1, "m": 1, "adversary.action": "bitflip",
                                "adversary.bit": 0, "adversary.link": "sm_da"})
    assert sc.adversary[0].action == BitFlip(0) and sc.adversary[0].link is Link.SM_TO_DA


@pytest.mark.parametrize("cfg", [
    {"mode": "low", "n": 1},
    {"mode": "low", "n": 1, "m": 1, "colour": "red"},
    {"mode": "medium", "n": 1, "m": 1},
    {"mode": "low", "n": 0, "m": 1},
    {"mode": "high", "n": 1, "m": 3},
    {"mode": "low", "n": 1, "m": 1, "aes_bits": 100},
    {"mode": "low", "n": 1, "m": 1, "scale": 7},
    {"mode": "low", "n": 1, "m": 1, "hash": "md5"},
    {"mode": "low", "n": "many", "m": 1},
    {"mode": "low", "n": 1, "m": 1, "freshness": "yes"},
    {"mode": "low", "n": 1, "m": 1, "adversary.action": "teleport"},
    {"mode": "low", "n": 1, "m": 1, "adversary.action": "drop", "adversary.link": "sm_cc"},
    {"mode": "low", "n": 1, "m": 1, "adversary.action": "drop", "adversary.frames": "some"},
    {"mode": "low", "n": 1, "m": 1, "synthetic.distribution": "normal"},
    [1, 2, 3],
])
def test_config_invalid(cfg):
    with pytest.raises(ConfigInvalid):
        scenario_from_mapping(cfg)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigInvalid):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigInvalid):
        load_config(bad)
