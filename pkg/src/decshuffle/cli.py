"""Command-line front end: simulate, curve, bounds, verify-golden."""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import bounds
from .core import Assignment, Scheme
from .golden import verify_all
from .schemes import combined_corners, combined_load, combined_plan, storage_point
from .sim import SHUFFLE_MODES, ConfigError, SimConfig, VerificationError, run_session

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


def fmt_q(x: Fraction | None) -> str:
    if x is None:
        return ""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def fmt_d(x: Fraction | None) -> str:
    return "" if x is None else format(float(x), ".12g")


def parse_assignments(text: str) -> list[Assignment]:
    """``5,1,2,3,4;1,2,3,4,5`` (one unit per worker) or ``1,2|3,4;3,4|1,2`` (batches)."""
    out = []
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        if "|" in chunk:
            out.append(Assignment.of([[int(u) for u in b.split(",")] for b in chunk.split("|")]))
        else:
            out.append(Assignment.from_units([int(u) for u in chunk.split(",")]))
    return out


def read_config(path: str | None) -> dict[str, str]:
    """Flat ``key=value`` file; blank lines and ``#`` comments ignored."""
    if not path:
        return {}
    values = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


SIM_DEFAULTS = {
    "k": "4",
    "q": "1",
    "bits": None,
    "epochs": "3",
    "scheme": "b",
    "layout_param": None,
    "shuffle": "worst",
    "seed": None,
    "out": "out",
    "script": None,
    "initial": None,
}


def _merged(args: argparse.Namespace) -> dict[str, str | None]:
    values = dict(SIM_DEFAULTS)
    values["seed"] = os.environ.get("SHUFFLE_SEED", "0")
    values.update(read_config(args.config))
    values.update({k: v for k, v in vars(args).items() if k in SIM_DEFAULTS and v is not None})
    return values


def default_param(scheme: Scheme, K: int) -> Fraction | int | None:
    return {Scheme.A: 1, Scheme.B: K - 1, Scheme.C: 2, Scheme.COMBINED: Fraction(2)}.get(scheme)


def build_config(values: dict[str, str | None]) -> SimConfig:
    try:
        K, q, T = int(values["k"]), int(values["q"]), int(values["epochs"])
        scheme = Scheme.parse(values["scheme"])
        raw = values["layout_param"]
        if raw is None:
            param = default_param(scheme, K)
        elif scheme is Scheme.COMBINED:
            param = Fraction(raw)
        else:
            param = int(raw)
        script = tuple(parse_assignments(values["script"])) if values["script"] else ()
        initial = parse_assignments(values["initial"])[0] if values["initial"] else None
        seed = int(values["seed"])
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(str(exc)) from None
    probe = SimConfig(K, q, 1, T, scheme, param, values["shuffle"], seed, script, initial)
    try:
        unit = probe.block_unit()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    B = int(values["bits"]) if values["bits"] is not None else unit
    cfg = SimConfig(K, q, B, T, scheme, param, values["shuffle"], seed, script, initial)
    cfg.validate()
    return cfg


SUMMARY_FIELDS = [
    "epoch", "assignment", "total_bits", "load", "load_decimal", "worst_case", "worst_case_decimal",
    "lower_bound", "converse", "full_derangement", "seed", "prng",
]


def summary_csv(report) -> str:
    buf = io.StringIO()
    checks = list(report.epochs[0].verdicts) if report.epochs else []
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_FIELDS + [c.replace("-", "_") for c in checks])
    for e in report.epochs:
        writer.writerow(
            [
                e.epoch, str(e.assignment), e.total_bits, fmt_q(e.load), fmt_d(e.load), fmt_q(e.worst_case),
                fmt_d(e.worst_case), fmt_q(e.lower_bound), fmt_q(e.converse), int(e.full_derangement),
                report.config.seed, report.prng,
            ]
            + [e.verdicts[c] for c in checks]
        )
    return buf.getvalue()


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg = build_config(_merged(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(_merged(args)["out"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        report = run_session(cfg)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    (out / "summary.csv").write_text(summary_csv(report))
    header = [
        f"# K={cfg.K} q={cfg.q} B={cfg.B} T={cfg.T} scheme={cfg.scheme.value} param={cfg.param} "
        f"shuffle={cfg.shuffle} seed={cfg.seed} prng={report.prng}",
        "# epoch\tsender\ttag\tcomponents\tbits\tpayload_hex",
    ]
    (out / "trace.log").write_text("\n".join(header + report.trace) + "\n")
    for e in report.epochs:
        print(f"epoch {e.epoch}: load {fmt_q(e.load)} (worst case {fmt_q(e.worst_case)})")
    print(f"all checks passed; wrote {out / 'summary.csv'} and {out / 'trace.log'}")
    return EXIT_OK


@dataclass(frozen=True)
class CurveRow:
    K: int
    q: int
    M_over_q: Fraction
    scheme: str
    load_over_q: Fraction
    converse_over_q: Fraction
    centralized_over_q: Fraction
    embedded_baseline_over_q: Fraction
    gap: Fraction
    p2p_cost: Fraction
    source: str

    RATIONALS = (
        "M_over_q", "load_over_q", "converse_over_q", "centralized_over_q", "embedded_baseline_over_q", "gap",
        "p2p_cost",
    )


def default_grid(K: int) -> list[Fraction]:
    pts = {Fraction(m) for m in range(1, K + 1)}
    pts |= {storage_point(Scheme.A, K, g) for g in range(1, K)}
    return sorted(pts)


def mixture_label(K: int, x: Fraction) -> str:
    plan = combined_plan(K, x)
    if len(plan) == 1:
        return plan[0].corner.label
    return " + ".join(f"{fmt_q(p.weight)}*{p.corner.label}" for p in plan)


def measure_corner(K: int, q: int, x: Fraction, seed: int) -> Fraction:
    probe = SimConfig(K, q, 1, 2, Scheme.COMBINED, x, "worst", seed)
    cfg = SimConfig(K, q, probe.block_unit(), 2, Scheme.COMBINED, x, "worst", seed)
    report = run_session(cfg)
    return report.worst_load / q


def curve_rows(K: int, q: int = 1, grid: Sequence[Fraction] | None = None, simulate: bool = True, seed: int = 0):
    vertices = {c.storage for c in combined_corners(K)}
    rows = []
    for x in sorted(set(grid or default_grid(K))):
        formula = combined_load(K, x)
        load, source = formula, "formula"
        if simulate and x in vertices:
            load, source = measure_corner(K, q, x, seed), "measured"
            if load != formula:
                raise VerificationError(0, None, "load-formula", f"K={K} M/q={x}: measured {load}, formula {formula}")
        rows.append(
            CurveRow(
                K, q, x, mixture_label(K, x), load, bounds.converse_envelope_at(K, x),
                bounds.centralized_curve(K).at(x), bounds.embedded_curve(K).at(x),
                bounds.optimality_gap(K, x), bounds.p2p_cost(K, x), source,
            )
        )
    return rows


def curve_csv(rows: Sequence[CurveRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    head = ["K", "q", "scheme", "source"]
    for name in CurveRow.RATIONALS:
        head += [name, f"{name}_decimal"]
    writer.writerow(head)
    for r in rows:
        line = [r.K, r.q, r.scheme, r.source]
        for name in CurveRow.RATIONALS:
            v = getattr(r, name)
            line += [fmt_q(v), fmt_d(v)]
        writer.writerow(line)
    return buf.getvalue()


def cmd_curve(args: argparse.Namespace) -> int:
    try:
        grid = [Fraction(x) for x in args.grid.split(",")] if args.grid else None
        if grid and any(not 1 <= x <= args.k for x in grid):
            raise ValueError(f"grid points must lie in [1, {args.k}]")
        if args.k < 2:
            raise ValueError("need K >= 2")
        seed = args.seed if args.seed is not None else int(os.environ.get("SHUFFLE_SEED", "0"))
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows = curve_rows(args.k, args.q, grid, not args.no_sim, seed)
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    text = curve_csv(rows)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "curve.csv").write_text(text)
        print(f"wrote {out / 'curve.csv'}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    K = args.k
    try:
        if K < 2:
            raise ValueError("need K >= 2")
        points = [Fraction(args.m_over_q)] if args.m_over_q else [Fraction(m) for m in range(1, K + 1)]
        rows = []
        for x in points:
            rows.append(
                [fmt_q(x), fmt_q(bounds.converse_envelope_at(K, x)), fmt_q(bounds.centralized_curve(K).at(x)),
                 fmt_q(bounds.embedded_curve(K).at(x)), fmt_q(combined_load(K, x)),
                 fmt_q(bounds.optimality_gap(K, x)), fmt_q(bounds.p2p_cost(K, x))]
            )
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["M_over_q", "converse", "centralized", "embedded", "combined", "gap", "p2p_cost"])
    writer.writerows(rows)
    return EXIT_OK


def cmd_verify_golden(args: argparse.Namespace) -> int:
    problems = verify_all()
    for p in problems:
        print(f"MISMATCH {p}")
    if problems:
        return EXIT_VERIFY
    print("golden examples: all match")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="decshuffle", description="Decentralized data shuffling simulator and bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a multi-epoch session and verify it")
    sim.add_argument("--config", help="flat key=value file (flags override it)")
    sim.add_argument("--k", help="number of workers K")
    sim.add_argument("--q", help="units per worker")
    sim.add_argument("--bits", help="bits per unit B (default: smallest valid)")
    sim.add_argument("--epochs", help="number of shuffles T")
    sim.add_argument("--scheme", help="uncoded | a | b | c | combined")
    sim.add_argument("--layout-param", dest="layout_param", help="g for a, m for b, M/q for combined")
    sim.add_argument("--shuffle", help=" | ".join(SHUFFLE_MODES))
    sim.add_argument("--seed", help="PRNG seed (default: $SHUFFLE_SEED or 0)")
    sim.add_argument("--script", help="assignments for --shuffle scripted, e.g. 1,2,3;2,3,1")
    sim.add_argument("--initial", help="starting assignment, same syntax as --script")
    sim.add_argument("--out", help="output directory")
    sim.set_defaults(func=cmd_simulate)

    cur = sub.add_parser("curve", help="storage-load tradeoff table")
    cur.add_argument("--k", type=int, required=True)
    cur.add_argument("--q", type=int, default=1)
    cur.add_argument("--grid", help="comma-separated M/q values (default: integer and Scheme A corners)")
    cur.add_argument("--seed", type=int)
    cur.add_argument("--no-sim", action="store_true", help="use closed forms only")
    cur.add_argument("--out", help="directory for curve.csv (default: stdout)")
    cur.set_defaults(func=cmd_curve)

    bnd = sub.add_parser("bounds", help="evaluate bounds and ratios")
    bnd.add_argument("--k", type=int, required=True)
    bnd.add_argument("--m-over-q", dest="m_over_q", help="single storage point (default: every integer)")
    bnd.set_defaults(func=cmd_bounds)

    gold = sub.add_parser("verify-golden", help="replay the worked examples")
    gold.set_defaults(func=cmd_verify_golden)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
