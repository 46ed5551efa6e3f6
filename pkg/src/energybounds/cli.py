"""Command line: ``energybounds run <config>`` and ``energybounds validate <config>``.

A config argument is a TOML path or the name of a bundled config
(``energybounds list`` prints them). The default worker count is read from
``ENERGYBOUNDS_THREADS``. Exit codes: 0 success, 1 config error, 2 runtime
or infeasibility error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import SEED_NAMES, ConfigError, bundled_configs, load_raw, parse, validate
from .numeric import InfeasibleBoundsError
from .runner import RunError, run

THREADS_ENV = "ENERGYBOUNDS_THREADS"


def _seed_override(text: str) -> tuple[str, int]:
    name, sep, value = text.partition("=")
    if not sep or name not in SEED_NAMES:
        raise argparse.ArgumentTypeError(f"expected name=int with name in {SEED_NAMES}, got {text!r}")
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed {value!r} is not an integer") from None
    if seed < 0:
        raise argparse.ArgumentTypeError("seeds must be non-negative")
    return name, seed


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="energybounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None, help="directory for the result files (default: output.path)")
    p_run.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p_run.add_argument("--seed-override", type=_seed_override, action="append", default=[], metavar="NAME=INT")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    sub.add_parser("list", help="list bundled configs")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in sorted(bundled_configs()):
            print(name)
        return 0
    try:
        raw = load_raw(args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    problems = validate(raw)
    if args.command == "validate":
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        if not problems:
            print(f"{raw.get('name')}: ok")
        return 1 if problems else 0
    if problems:
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return 1
    config = parse(raw)
    if args.seed_override:
        config = config.with_seeds(dict(args.seed_override))
    threads = args.threads if args.threads is not None else _default_threads()
    try:
        result = run(config, output_dir=args.output_dir, threads=max(1, threads))
    except (RunError, InfeasibleBoundsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for rec in result.records:
        tight = "" if rec.lo is None else f" tight=[{rec.lo:.6g}, {rec.hi:.6g}]"
        q1 = "" if rec.q1 is None else f" Q1={rec.q1:.2f}%"
        print(f"{rec.state}\t{rec.set}\tk={rec.moment}\ttrue={rec.true:.6g}"
              f" lin=[{rec.lo_lin:.6g}, {rec.hi_lin:.6g}]{tight}{q1}")
    for path in result.files:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
