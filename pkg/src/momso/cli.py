"""Command-line interface.

    momso run <config> [--mode momso|analytic|both] [--out out.csv]
              [--reduce grounded=1,2|open=4,5,6] [--sequence]
              [--workers N] [--tol REL]
    momso validate <config>
    momso greens-check <config>

Exit codes: 0 success, 1 configuration/validation error, 2 numerical failure
at one or more frequencies (partial results are still written).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .checks import greens_oracle_suite
from .model import ConfigError, parse_config, validate_geometry
from .report import emit_csv, run_sweep
from .special import QuadratureSpec

__all__ = ["main"]


def _load_system(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(1) from exc
    try:
        system = parse_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        raise SystemExit(1) from exc
    return system


def _parse_reduction(arg: str):
    kind, _, ids = arg.partition("=")
    if kind not in ("grounded", "open") or not ids:
        raise argparse.ArgumentTypeError(
            "expected grounded=<ids> or open=<ids> (1-based, comma separated)"
        )
    try:
        idx = tuple(int(t) - 1 for t in ids.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad conductor id list {ids!r}") from exc
    return kind, idx


def _cmd_validate(args) -> int:
    system = _load_system(args.config)
    rep = validate_geometry(system)
    print(rep)
    return 0 if rep.is_valid else 1


def _cmd_greens_check(args) -> int:
    system = _load_system(args.config)
    results = greens_oracle_suite(system)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name}: {r.detail}")
        ok = ok and r.passed
    return 0 if ok else 2


def _cmd_run(args) -> int:
    system = _load_system(args.config)
    rep = validate_geometry(system)
    if not rep.is_valid:
        print(rep, file=sys.stderr)
        return 1
    quad = None
    if args.tol is not None:
        quad = QuadratureSpec(rtol=args.tol, atol=args.tol * 1e-4)
    report = run_sweep(system, mode=args.mode, reduction=args.reduce,
                       sequence=args.sequence, workers=args.workers,
                       quad=quad)
    csv_text = emit_csv(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
        print(f"wrote {args.out} ({len(report.frequencies)} frequencies)")
    else:
        sys.stdout.write(csv_text)
    times = [t for t in report.wall_times if np.isfinite(t)]
    if times:
        print(f"per-frequency wall time: median {np.median(times):.3f} s, "
              f"max {max(times):.3f} s", file=sys.stderr)
    if report.failures:
        for i, msg in sorted(report.failures.items()):
            print(f"frequency {report.frequencies[i]:g} Hz failed: {msg}",
                  file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="momso",
        description="Series impedance of buried cable systems "
                    "(surface-operator method of moments)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a frequency sweep")
    p_run.add_argument("config")
    p_run.add_argument("--mode", choices=("momso", "analytic", "both"),
                       default="momso")
    p_run.add_argument("--out", default=None, help="CSV output path")
    p_run.add_argument("--reduce", type=_parse_reduction, default=None,
                       metavar="grounded=IDS|open=IDS")
    p_run.add_argument("--sequence", action="store_true",
                       help="emit zero/positive-sequence columns "
                            "(needs a 3x3 result)")
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--tol", type=float, default=None,
                       help="relative quadrature tolerance override")
    p_run.set_defaults(fn=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a configuration")
    p_val.add_argument("config")
    p_val.set_defaults(fn=_cmd_validate)

    p_chk = sub.add_parser("greens-check",
                           help="run the Green's-function oracle suite")
    p_chk.add_argument("config")
    p_chk.set_defaults(fn=_cmd_greens_check)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
