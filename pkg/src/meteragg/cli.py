"""Command-line entry point: ``run``, ``bench`` and ``attack-eval``.

Exit codes: 0 success, 1 undetected corruption of a recovered sum,
2 usage error, 3 invalid configuration, 4 unreadable or invalid trace data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .attacks import MIN_TRIALS, attack_eval, format_results, results_csv
from .bench import DEFAULT_FRAMES, MIN_REPETITIONS, cmd_bench
from .errors import ConfigInvalid, MissingCell, NegativeReading, Overflow, ParseError
from .netsim import run_epoch
from .scenario_io import load_config

EXIT_OK = 0
EXIT_CORRUPTION = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_DATA = 4

log = logging.getLogger("meteragg")


def _csv_list(kind):
    def parse(text: str):
        try:
            return [kind(x) for x in text.split(",") if x.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


def _write(out: Optional[Path], files: dict[str, str]) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
        log.info("wrote %s", out / name)


def cmd_run(args) -> int:
    config = load_config(args.config)
    report = run_epoch(config)
    out = args.out or config.out_dir
    _write(out, {"report.json": report.to_json() + "\n", "verdicts.csv": report.to_csv()})
    print(f"mode={report.mode} meters={report.n_registered} (effective {report.effective_n}) "
          f"frames={report.frames_total}")
    print(f"attacked={report.frames_attacked} detected={report.frames_detected} "
          f"corrupted_undetected={report.frames_corrupted_undetected}")
    for kind, count in report.verdict_counts().items():
        print(f"  {kind:<18} {count}")
    if report.frames_corrupted_undetected:
        log.error("%d frame(s) recovered a wrong aggregate without detection",
                  report.frames_corrupted_undetected)
        return EXIT_CORRUPTION
    return EXIT_OK


def cmd_bench_main(args) -> int:
    report = cmd_bench(args.hash, args.aes, args.reps, args.frames)
    print(report.format_table())
    _write(args.out, {"bench.json": json.dumps(report.to_dict(), indent=2) + "\n"})
    return EXIT_OK


def cmd_attack_eval(args) -> int:
    config = load_config(args.config)
    results = attack_eval(config, args.trials, args.seed)
    print(format_results(results))
    _write(args.out, {"attacks.json": json.dumps([r.to_dict() for r in results], indent=2) + "\n",
                      "attacks.csv": results_csv(results)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meteragg", description="Simulate, attack and benchmark masked smart-meter aggregation.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario epoch")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, help="directory for report.json and verdicts.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="time initialization and smart-meter iterations")
    p.add_argument("--hash", type=_csv_list(str), default=["sha224", "sha256", "sha512"])
    p.add_argument("--aes", type=_csv_list(int), default=[128, 192, 256])
    p.add_argument("--reps", type=int, default=MIN_REPETITIONS)
    p.add_argument("--frames", type=int, default=DEFAULT_FRAMES,
                   help="frames per epoch for the initialization workload")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_bench_main)

    p = sub.add_parser("attack-eval", help="detection rates for each attacker class")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--trials", type=int, default=MIN_TRIALS)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_attack_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingCell, ParseError, NegativeReading, Overflow, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
