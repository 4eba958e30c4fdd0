"""Command-line interface.

Single queries (payoff, stationary, series), exhaustive analyses (ess-scan,
phase-diagram, single-shot), replicator basins, and the verification suite.
Rational parameters are written as p/q or decimal strings and parsed
exactly; all tabular output is CSV or JSON with rationals serialized as
"p/q" strings, so results diff cleanly across runs and machines.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .game import Params
from .ess import EssReport, scan_all_ess, single_shot_ess
from .markov import average_payoff, payoff_series, stationary
from .replicator import DEFAULT_EPS, BasinError, region_basin_shares
from .strategies import ReactiveStrategy, decode
from .verify import CHECK_IDS, run_checks

WORKERS_ENV = "CROWDDILEMMA_WORKERS"


def _parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _parse_eps(text: str):
    if "/" in text:
        return Fraction(text)
    return float(text)


def _parse_strategy(text: str) -> int:
    """Strategy argument: an index 0..4095 or a 6-action response string."""
    if "," in text:
        return ReactiveStrategy.from_string(text).index
    idx = int(text)
    decode(idx)  # range check
    return idx


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _series_str(values) -> str:
    return ";".join(str(v) for v in values)


def _report_record(report: EssReport) -> dict:
    return {
        "d": str(report.d),
        "q": str(report.q),
        "ess": ";".join(str(i) for i in report.ess),
        "efficient": ";".join(str(i) for i in report.efficient),
        "regions": "".join(sorted(report.regions)),
        "on_boundary": report.on_boundary,
        "degenerate": ";".join(f"{n}:{m}:{kind}" for n, m, kind in report.degenerate),
        "series": {str(n): _series_str(s) for n, s in sorted(report.series.items())},
    }


def _rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands

def _cmd_payoff(args) -> int:
    params = Params(args.d, args.q, args.eps if args.eps is not None else 0.0)
    if args.mode == "float":
        result = average_payoff(args.n, args.m, "float", params)
        print(f"pi({args.n},{args.m}) = {result.value!r}")
        return 0
    result = average_payoff(args.n, args.m, "exact", params)
    print(f"pi({args.n},{args.m}) = {result.value}")
    series = result.value.taylor(args.series)
    print(f"series to eps^{args.series}: [{', '.join(str(c) for c in series)}]")
    if args.eps is not None:
        print(f"value at eps={args.eps}: {result.value(Fraction(args.eps))}")
    return 0


def _cmd_stationary(args) -> int:
    from .game import CHAIN_STATES

    params = Params(args.d, args.q, args.eps if args.eps is not None else 0.0)
    dist = stationary(args.n, args.m, args.mode, params)
    for state, value in zip(CHAIN_STATES, dist):
        print(f"{state.label:10s} {value}")
    return 0


def _cmd_series(args) -> int:
    params = Params(args.d, args.q)
    coeffs = payoff_series(args.n, args.m, params, args.order)
    print(f"pi({args.n},{args.m}) series: [{', '.join(str(c) for c in coeffs)}]")
    return 0


def _cmd_ess_scan(args) -> int:
    report = scan_all_ess(args.d, args.q, mode=args.mode, workers=args.workers)
    record = _report_record(report)
    if args.format == "json":
        text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    else:
        cols = ["d", "q", "ess", "efficient", "regions"]
        text = _rows_to_csv([record], cols)
    _emit(text, args.out)
    return 0


def _default_grid() -> list[tuple[Fraction, Fraction]]:
    """19x19 twentieths grid, shifted off every region boundary curve."""
    shift = Fraction(1, 1000)
    values = [Fraction(k, 20) + shift for k in range(1, 20)]
    return [(d, q) for d in values for q in values]


def _scan_point(job) -> tuple[str, dict]:
    d, q, mode = job
    report = scan_all_ess(d, q, mode=mode, workers=1, with_series=False)
    return f"{d}|{q}", _report_record(report)


def _cmd_phase_diagram(args) -> int:
    if args.out is None:
        print("phase-diagram requires --out PATH", file=sys.stderr)
        return 2
    points = _default_grid() if args.grid is None else [
        (d, q) for d in _grid_values(args.grid) for q in _grid_values(args.grid)
    ]
    partial_path = Path(args.out + ".partial")
    done: dict[str, dict] = {}
    if args.resume and partial_path.exists():
        for line in partial_path.read_text().splitlines():
            if line.strip():
                entry = json.loads(line)
                done[entry["key"]] = entry["record"]
    todo = [(d, q, args.mode) for d, q in points if f"{d}|{q}" not in done]
    partial = open(partial_path, "a")
    try:
        if args.workers > 1 and todo:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                for key, record in pool.map(_scan_point, todo):
                    partial.write(json.dumps({"key": key, "record": record}) + "\n")
                    partial.flush()
                    done[key] = record
        else:
            for job in todo:
                key, record = _scan_point(job)
                partial.write(json.dumps({"key": key, "record": record}) + "\n")
                partial.flush()
                done[key] = record
    finally:
        partial.close()
    rows = [done[f"{d}|{q}"] for d, q in points]
    cols = ["d", "q", "ess", "efficient", "regions"]
    if args.format == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    else:
        text = _rows_to_csv(rows, cols)
    _emit(text, args.out)
    partial_path.unlink(missing_ok=True)
    return 0


def _grid_values(count: int) -> list[Fraction]:
    shift = Fraction(1, 1000)
    return [Fraction(k, count + 1) + shift for k in range(1, count + 1)]


def _cmd_single_shot(args) -> int:
    if args.d is not None and args.q is not None:
        points = [(args.d, args.q)]
    else:
        points = [(Fraction(i, 20), Fraction(j, 20)) for i in range(1, 20) for j in range(1, 20)]
    rows = []
    for d, q in points:
        ess = single_shot_ess(d, q)
        rows.append({"d": str(d), "q": str(q),
                     "ess": ";".join(sorted(a.label for a in ess))})
    if args.format == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    else:
        text = _rows_to_csv(rows, ["d", "q", "ess"])
    _emit(text, args.out)
    return 0


def _basin_rows(d: Fraction, q: Fraction, eps: float) -> list[dict]:
    """CSV rows of basin shares at one region-(A) point."""
    shares, unresolved = region_basin_shares(d, q, eps)
    return [
        {"d": str(d), "q": str(q), "epsilon": repr(eps), "strategy_index": idx,
         "share": repr(shares[idx]), "unresolved_fraction": repr(unresolved)}
        for idx in sorted(shares)
    ]


def _cmd_basins(args) -> int:
    rows = []
    for d, q in args.point:
        try:
            rows.extend(_basin_rows(d, q, args.eps))
        except BasinError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    cols = ["d", "q", "epsilon", "strategy_index", "share", "unresolved_fraction"]
    if args.format == "json":
        text = json.dumps(rows, indent=2, sort_keys=True) + "\n"
    else:
        text = _rows_to_csv(rows, cols)
    _emit(text, args.out)
    return 0


def _cmd_verify(args) -> int:
    only = args.only.split(",") if args.only else None
    results = run_checks(only=only, workers=args.workers)
    failed = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"[{status}] {r.check_id} ({r.seconds:.1f}s): {r.detail}")
        if not r.ok:
            failed += 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser

def _point_arg(text: str) -> tuple[Fraction, Fraction]:
    try:
        d_text, q_text = text.split(",")
        return _parse_rational(d_text), _parse_rational(q_text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected d,q (e.g. 1/5,1/20): {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowddilemma",
        description="Evolutionary analysis of the iterated crowdsourcing dilemma",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, out=True):
        if out:
            p.add_argument("--out", help="write output to this path instead of stdout")
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--workers", type=int, default=_default_workers(),
                       help=f"worker processes (default ${WORKERS_ENV} or 1)")

    p = sub.add_parser("payoff", help="average payoff of one ordered strategy pair")
    p.add_argument("--n", type=_parse_strategy, required=True)
    p.add_argument("--m", type=_parse_strategy, required=True)
    p.add_argument("--d", type=_parse_rational, required=True)
    p.add_argument("--q", type=_parse_rational, required=True)
    p.add_argument("--eps", type=_parse_eps, default=None)
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.add_argument("--series", type=int, default=3, help="series order printed in exact mode")
    p.set_defaults(func=_cmd_payoff)

    p = sub.add_parser("stationary", help="stationary distribution of the realized-pair chain")
    p.add_argument("--n", type=_parse_strategy, required=True)
    p.add_argument("--m", type=_parse_strategy, required=True)
    p.add_argument("--d", type=_parse_rational, required=True)
    p.add_argument("--q", type=_parse_rational, required=True)
    p.add_argument("--eps", type=_parse_eps, default=None)
    p.add_argument("--mode", choices=("exact", "float"), default="exact")
    p.set_defaults(func=_cmd_stationary)

    p = sub.add_parser("series", help="exact payoff series about eps = 0")
    p.add_argument("--n", type=_parse_strategy, required=True)
    p.add_argument("--m", type=_parse_strategy, required=True)
    p.add_argument("--d", type=_parse_rational, required=True)
    p.add_argument("--q", type=_parse_rational, required=True)
    p.add_argument("--order", type=int, default=3)
    p.set_defaults(func=_cmd_series)

    p = sub.add_parser("ess-scan", help="exhaustive ESS scan at one parameter point")
    p.add_argument("--d", type=_parse_rational, required=True)
    p.add_argument("--q", type=_parse_rational, required=True)
    p.add_argument("--mode", choices=("screen", "exact", "float"), default="screen")
    add_common(p)
    p.set_defaults(func=_cmd_ess_scan)

    p = sub.add_parser("phase-diagram", help="ESS scan over a (d, q) grid, resumable")
    p.add_argument("--grid", type=int, default=None,
                   help="points per axis (default: the 19x19 shifted-twentieths grid)")
    p.add_argument("--mode", choices=("screen", "exact", "float"), default="screen")
    p.add_argument("--no-resume", dest="resume", action="store_false",
                   help="ignore an existing partial results file")
    add_common(p)
    p.set_defaults(func=_cmd_phase_diagram)

    p = sub.add_parser("single-shot", help="ESS sets of the non-iterated game")
    p.add_argument("--d", type=_parse_rational, default=None)
    p.add_argument("--q", type=_parse_rational, default=None)
    add_common(p)
    p.set_defaults(func=_cmd_single_shot)

    p = sub.add_parser("basins", help="replicator basin shares inside region (A)")
    p.add_argument("--point", type=_point_arg, action="append", required=True,
                   metavar="D,Q", help="parameter point, repeatable")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    add_common(p)
    p.set_defaults(func=_cmd_basins)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--only", help="comma-separated check ids: " + ",".join(CHECK_IDS))
    add_common(p, out=False)
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, BasinError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
