"""``bbgky`` command-line front end.

Exit codes: 0 success, 1 invalid system or failed validation, 2 usage or I/O
error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time

from . import __version__
from .cluster import MODES
from .deriver import DerivationMemo, derive
from .dsl import parse_spec, split_target
from .errors import BBGKYError, SpecParseError, SpecificationError, UsageError
from .oracle import ConcreteSystem, Evaluator, check_equation
from .render import display, to_latex
from .serialize import to_data

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _read_spec(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _load(args):
    text = _read_spec(args.spec)
    spec, file_targets = parse_spec(text)
    if args.targets:
        targets = [split_target(t) for t in args.targets]
    else:
        targets = file_targets
    if not targets:
        raise UsageError("no targets given and the spec has no derive lines")
    return spec, [spec.resolve_target(t) for t in targets]


def _names(target) -> tuple:
    return tuple(x.name for x in target)


def cmd_derive(args, out) -> int:
    spec, targets = _load(args)
    memo = DerivationMemo()
    eqs = [derive(spec, t, memo, args.expansion) for t in targets]
    if args.format == "json":
        payload = [{"target": list(_names(t)), "equation": to_data(eq)}
                   for t, eq in zip(targets, eqs)]
        json.dump(payload, out, indent=2)
        out.write("\n")
    else:
        fmt = to_latex if args.format == "latex" else display
        for eq in eqs:
            out.write(fmt(eq) + "\n")
    return EXIT_OK


def cmd_bench(args, out) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    spec, targets = _load(args)
    rows = []
    for t in targets:
        times = []
        for _ in range(args.reps):
            start = time.perf_counter()
            eq = derive(spec, t, DerivationMemo(), args.expansion)
            times.append(time.perf_counter() - start)
        std = statistics.stdev(times) if len(times) > 1 else 0.0
        rows.append(("".join(_names(t)), len(eq.rhs), statistics.fmean(times), std))

    width = max(6, *(len(r[0]) for r in rows))
    out.write(f"{'target':<{width}}  {'terms':>5}  time (s)\n")
    for name, n, mean, std in rows:
        out.write(f"{name:<{width}}  {n:>5}  {mean:.4f} +- {std:.4f}\n")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["target", "expansion", "terms", "reps", "mean_s", "std_s"])
    for name, n, mean, std in rows:
        writer.writerow([name, args.expansion, n, args.reps, f"{mean:.6f}", f"{std:.6f}"])
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        out.write("\n" + buf.getvalue())
    return EXIT_OK


def cmd_validate(args, out) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds must be at least 1")
    spec, targets = _load(args)
    modes = MODES if args.expansion == "both" else (args.expansion,)
    names = [_names(t) for t in targets]
    reports = []
    for seed in range(args.seed, args.seed + args.seeds):
        system = ConcreteSystem.random(spec, members=args.members, dims=args.dims,
                                       seed=seed, targets=names)
        for mode in modes:
            memo, ev = DerivationMemo(), Evaluator(system, mode)
            for t in targets:
                eq = derive(spec, t, memo, mode)
                reports.append(check_equation(eq, system, args.tol, evaluator=ev))
    payload = {
        "tol": args.tol, "members": args.members, "dims": args.dims,
        "passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }
    json.dump(payload, out, indent=2)
    out.write("\n")
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbgky", description="Derive and check BBGKY hierarchy equations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, both=False):
        p.add_argument("spec", help="system description file, or - for standard input")
        p.add_argument("targets", nargs="*",
                       help="targets such as A1F1 or A1,F1 (default: the spec's derive lines)")
        choices = MODES + ("both",) if both else MODES
        p.add_argument("--expansion", choices=choices, default="paper")

    p = sub.add_parser("derive", help="print derived equations")
    common(p)
    p.add_argument("--format", choices=("plain", "latex", "json"), default="plain")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("bench", help="time cold derivations")
    common(p)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--csv", help="write the CSV table here instead of standard output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check derived equations on random dense systems")
    common(p, both=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    p.add_argument("--dims", type=int, default=2)
    p.add_argument("--members", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    where = "<stdin>" if args.spec == "-" else args.spec
    try:
        return args.func(args, out)
    except SpecParseError as exc:
        print(f"bbgky: {where}:{exc}", file=sys.stderr)
        return EXIT_FAIL
    except SpecificationError as exc:
        print(f"bbgky: {where}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (UsageError, OSError) as exc:
        print(f"bbgky: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BBGKYError as exc:
        print(f"bbgky: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
