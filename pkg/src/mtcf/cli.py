"""Command line interface: ``mtcf run``, ``mtcf compare`` and ``mtcf preset``.

Exit codes
----------
0
    success (``compare``: traces agree within tolerance)
1
    ``compare``: traces disagree
2
    invalid configuration, unreadable input or mismatched grids
3
    Monte-Carlo run aborted because too many trajectories overflowed
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from mtcf import __version__
from mtcf.config import PRESETS, ConfigError, load, preset
from mtcf.stochastic import OverflowAbort
from mtcf.trace import CorrelationTrace, format_csv, read_csv, write_csv

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_OVERFLOW = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(f"mtcf: error: {msg}", file=sys.stderr)


def cmd_run(args) -> int:
    from mtcf.runner import run_config

    try:
        cfg = load(args.config)
        seed = None
        env = os.environ.get("MTCF_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigError("MTCF_SEED", f"not an integer: {env!r}") from None
            if seed < 0:
                raise ConfigError("MTCF_SEED", "must be non-negative")
        trace = run_config(cfg, workers=args.threads, seed_override=seed)
    except ConfigError as exc:
        _err(f"invalid configuration: {exc}")
        return EXIT_CONFIG
    except OverflowAbort as exc:
        _err(str(exc))
        return EXIT_OVERFLOW
    out = args.output
    if out is None and cfg.output is not None:
        out = Path(args.config).resolve().parent / cfg.output
    if out is None or str(out) == "-":
        sys.stdout.write(format_csv(trace))
    else:
        write_csv(trace, out)
        print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


def compare_traces(a: CorrelationTrace, b: CorrelationTrace):
    """Per-point ``|a - b|`` and the same divided by the combined standard error."""
    if a.t_prime.shape != b.t_prime.shape or not (
            np.allclose(a.t_prime, b.t_prime, rtol=0, atol=1e-9)
            and np.allclose(a.t, b.t, rtol=0, atol=1e-9)):
        raise ValueError("grids differ")
    diff = np.abs(a.values - b.values)
    se = np.sqrt(a.stderr**2 + b.stderr**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(se > 0, diff / np.where(se > 0, se, 1.0), np.where(diff > 0, np.inf, 0.0))
    return diff, se, ratio


def cmd_compare(args) -> int:
    try:
        a = read_csv(args.a)
        b = read_csv(args.b)
        diff, se, ratio = compare_traces(a, b)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    ok = bool(np.all(diff <= args.atol + args.nsigma * se))
    print(f"points={len(diff)} max_abs_diff={diff.max():.6g} max_diff_over_stderr={ratio.max():.6g} "
          f"{'AGREE' if ok else 'DISAGREE'}")
    if args.report:
        rep = CorrelationTrace(a.t, a.t_prime, a.values - b.values, se, ratio,
                               {"mtcf_version": __version__, "report": "a-b",
                                "columns": "re/im hold a-b; stderr_re holds the combined stderr; "
                                           "stderr_im holds |a-b|/stderr"})
        write_csv(rep, args.report)
    return EXIT_OK if ok else EXIT_MISMATCH


def cmd_preset(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for suffix, cfg in preset(args.name):
        path = outdir / f"{args.name}{suffix}.json"
        path.write_text(cfg.to_json(), encoding="utf-8")
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtcf", description="Multiple-time correlation functions "
                                "of open quantum systems.")
    p.add_argument("--version", action="version", version=f"mtcf {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evaluate a scenario file and write a CSV trace")
    r.add_argument("config", help="scenario JSON file")
    r.add_argument("-o", "--output", help="output CSV ('-' for stdout); overrides the config")
    r.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker processes for Monte-Carlo runs (default: CPU count)")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="compare two CSV traces on the same grid")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--atol", type=float, default=1e-6, help="absolute tolerance (default 1e-6)")
    c.add_argument("--nsigma", type=float, default=3.0,
                   help="allowed multiples of the combined standard error (default 3)")
    c.add_argument("--report", help="write a per-point difference CSV")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("preset", help="write the scenario files of a figure")
    s.add_argument("name", choices=sorted(PRESETS))
    s.add_argument("--out", default=".", help="directory for the JSON files")
    s.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        _err("--threads must be at least 1")
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
