"""Command-line interface: ``analyze``, ``bound`` and ``reproduce``.

Exit status is 0 on success, 1 when a reproduced claim fails and 2 on bad input.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import experiments
from .bounds import bound_general, bound_two_regions
from .cycles import search_cycles
from .errors import ArgumentMismatch, CylCyclesError, ExperimentFailed, ModelParseError
from .field import ABOVE, BELOW, PiecewiseField, is_continuous, load_model, max_crossings, perturb
from .flow import flow_with_events
from .trigpoly import TWO_PI

EXIT_OK, EXIT_CLAIM, EXIT_INPUT = 0, 1, 2


def _clean(obj):
    """Replace non-finite floats so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
        w.writerow(header)
        w.writerows(rows)


def field_summary(F: PiecewiseField) -> dict:
    lines = []
    for i in range(1, F.n + 1):
        entry = {"line": i, "x": F.line(i)}
        for side in (BELOW, ABOVE):
            z = F.switching_zeros(i, side)
            entry[f"switching_zeros_{side}"] = "identically zero" if z is None else list(z)
        lines.append(entry)
    return {"n": F.n, "M": F.M, "continuous": is_continuous(F), "max_crossings": max_crossings(F), "lines": lines}


def cmd_analyze(model_path, x_lo=None, x_hi=None, grid=None, lam=0.0, out=None, workers=1) -> tuple[dict, int]:
    F = perturb(load_model(model_path), lam) if lam else load_model(model_path)
    res = search_cycles(F, x_lo, x_hi, grid, workers=workers)
    bound = bound_general(F.n, F.M).to_dict() if F.n >= 1 and F.M >= 1 else None
    report = {
        "model": str(model_path),
        "lambda": lam,
        "field_summary": field_summary(F),
        "search": {"x_lo": res.x_lo, "x_hi": res.x_hi, "grid": res.grid},
        "cycles": [c.to_dict() for c in res.cycles],
        "uncertified": res.uncertified,
        "continua": [list(c) for c in res.continua],
        "constant_sign": [c.to_dict() for c in res.constant_sign],
        "excluded_initial_conditions": [{"x0": x, "reason": r} for x, r in res.excluded],
        "bound_context": bound,
    }
    status = EXIT_OK
    k_max = max_crossings(F)
    if any(c.sequence.k > k_max for c in res.cycles):
        status = EXIT_CLAIM
    if bound is not None and len(res.cycles) > int(bound["value"]):
        status = EXIT_CLAIM
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(dumps(report), encoding="utf-8")
        _write_csv(
            out / "cycles.csv",
            ["x0", "k", "sequence", "simple", "d_prime", "residual_norm"],
            [[repr(c.x0), c.sequence.k, " ".join(map(str, c.sequence.lines)), c.simple, repr(c.d_prime),
              repr(c.residual_norm)] for c in res.cycles],
        )
        _write_csv(out / "displacement.csv", ["x", "d"],
                   [[repr(x), "" if d is None else repr(d)] for x, d in res.samples])
        for j, c in enumerate(res.cycles, start=1):
            traj = flow_with_events(F, 0.0, c.x0, TWO_PI)
            _write_csv(out / f"trajectory_{j}.csv", ["t", "x"], [[repr(t), repr(x)] for t, x in traj.sample(F, 400)])
    return report, status


def cmd_bound(n=None, M=None, two_region=False, m=None, N=None) -> dict:
    if two_region:
        m = m if m is not None else M
        if m is None:
            raise ArgumentMismatch("--two-region needs --m or --M")
        N = N if N is not None else (M if M is not None else m)
        return bound_two_regions(m, N).to_dict()
    if n is None or M is None:
        raise ArgumentMismatch("bound needs --n and --M (or --two-region with --m)")
    return bound_general(n, M).to_dict()


def cmd_reproduce(name: str, k=None, eps=None, M=None, n=None, workers=1) -> dict:
    if name == "coll":
        return experiments.run_harmonic_abs(5 if k is None else k, 0.1 if eps is None else eps, workers=workers)
    if name == "max-crossings":
        return experiments.run_max_crossings(3 if M is None else M, 2 if n is None else n)
    if name == "constant-sign":
        return experiments.run_constant_sign(max_degree=3 if M is None else M)
    if name == "gasull":
        return experiments.run_positive_forcing(max_degree=2 if M is None else M)
    raise ArgumentMismatch(f"unknown experiment {name!r}")


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cylcycles", description="Crossing limit cycles of piecewise-linear periodic ODEs.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="search and certify limit cycles of a model file")
    a.add_argument("model")
    a.add_argument("--x-lo", type=float)
    a.add_argument("--x-hi", type=float)
    a.add_argument("--grid", type=int)
    a.add_argument("--lambda", dest="lam", type=float, default=0.0)
    a.add_argument("--out")
    a.add_argument("--workers", type=_positive, default=1)

    b = sub.add_parser("bound", help="evaluate the limit-cycle upper bound")
    b.add_argument("--n", type=_positive)
    b.add_argument("--M", type=_positive)
    b.add_argument("--two-region", action="store_true")
    b.add_argument("--m", type=_positive)
    b.add_argument("--N", type=_positive)
    b.add_argument("--out")

    r = sub.add_parser("reproduce", help="re-run a reference example and check its claim")
    r.add_argument("experiment", choices=["coll", "max-crossings", "constant-sign", "gasull"])
    r.add_argument("--k", type=_positive)
    r.add_argument("--eps", type=float)
    r.add_argument("--M", type=_positive)
    r.add_argument("--n", type=_positive)
    r.add_argument("--out")
    r.add_argument("--workers", type=_positive, default=1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        if args.command == "analyze":
            report, status = cmd_analyze(args.model, args.x_lo, args.x_hi, args.grid, args.lam, args.out, args.workers)
            sys.stdout.write(dumps({"cycles": len(report["cycles"]), "constant_sign": len(report["constant_sign"]),
                                    "continua": len(report["continua"]), "uncertified": len(report["uncertified"])}))
            if args.out is None:
                sys.stdout.write(dumps(report))
            return status
        if args.command == "bound":
            report = cmd_bound(args.n, args.M, args.two_region, args.m, args.N)
            print(f"value    = {report['value']}")
            print(f"factored = {report['factored']}")
            text = dumps(report)
            if args.out:
                Path(args.out).write_text(text, encoding="utf-8")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        report = cmd_reproduce(args.experiment, args.k, args.eps, args.M, args.n, args.workers)
        text = dumps(report)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text, encoding="utf-8")
        sys.stdout.write(text)
        if not report["pass"]:
            raise ExperimentFailed(f"{args.experiment}: claim check failed")
        return EXIT_OK
    except ExperimentFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CLAIM
    except (ModelParseError, ArgumentMismatch, ValueError, CylCyclesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
