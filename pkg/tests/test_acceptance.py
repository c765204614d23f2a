"""Acceptance suite: one check per criterion, each printing a PASS or FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import contextlib
import csv
import io
import random
import sys
import tempfile
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from decshuffle import cli, golden  # noqa: E402
from decshuffle.bounds import (  # noqa: E402
    converse_corner,
    converse_envelope_at,
    embedded_ic_baseline,
    optimality_gap,
    p2p_cost,
    per_shuffle_lower_bound,
    rational_grid,
)
from decshuffle.core import Assignment, Scheme, minimal_block_size  # noqa: E402
from decshuffle.layout import build_layout_a, layout_table, realized_sizes  # noqa: E402
from decshuffle.schemes import combined_corners, combined_load, scheme_load_formula, storage_point  # noqa: E402
from decshuffle.sim import (  # noqa: E402
    SimConfig,
    VerificationError,
    batch_derangement,
    gen_shuffle,
    is_full_derangement,
    run_session,
)
from helpers import fresh_state, shuffle_once  # noqa: E402

CRITERIA: dict[int, tuple[str, object]] = {}


def criterion(number: int, title: str):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn

    return register


@criterion(1, "golden family-A layout for K=3, q=1, g=2")
def golden_family_a_layout() -> list[str]:
    want = {
        1: "G1{1,2} G1{1,3} G2{1,2} G2{1,3} G3{1,2} G3{1,3} G3{2,3}",
        2: "G1{1,2} G1{1,3} G1{2,3} G2{1,2} G2{2,3} G3{1,2} G3{2,3}",
        3: "G1{1,3} G1{2,3} G2{1,2} G2{1,3} G2{2,3} G3{1,3} G3{2,3}",
    }
    got = layout_table(build_layout_a(3, 1, 2, Assignment.from_units((3, 1, 2))))
    return [f"worker {k}: {' '.join(got[k])}" for k in want if " ".join(got[k]) != want[k]]


@criterion(2, "Scheme B golden loads 5/6, 13/18, 2/3")
def scheme_b_golden() -> list[str]:
    prev = Assignment.from_units((5, 1, 2, 3, 4))
    want = [((1, 2, 3, 4, 5), Fraction(5, 6)), ((5, 2, 3, 4, 1), Fraction(13, 18)), ((5, 1, 3, 4, 2), Fraction(2, 3))]
    problems = []
    for target, value in want:
        state, units = fresh_state(Scheme.B, 3, 5, 1, prev, seed=sum(target))
        plan, _, _ = shuffle_once(Scheme.B, state, units, Assignment.from_units(target))
        if plan.load().normalized != value:
            problems.append(f"{target}: load {plan.load().normalized}, expected {value}")
    return problems


@criterion(3, "Scheme C golden load 5/2 and reference pair schedule")
def scheme_c_golden() -> list[str]:
    state, units = fresh_state(Scheme.C, 2, 5, 1, Assignment.from_units((5, 1, 2, 3, 4)))
    a_next = gen_shuffle("cyclic", 5, 1, 0, state.assignment)
    plan, _, _ = shuffle_once(Scheme.C, state, units, a_next)
    problems = []
    if plan.load().normalized != Fraction(5, 2):
        problems.append(f"load {plan.load().normalized}")
    if golden.scheme_c_sender_multisets(plan) != golden.reference_sender_multisets():
        problems.append("per-sender component multisets differ from the reference schedule")
    return problems + golden.check_scheme_c_k5()


def _worst_case_cases():
    for K in range(3, 9):
        yield K, Scheme.UNCODED, None
        for g in range(1, K):
            yield K, Scheme.A, g
        for m in (K - 2, K - 1):
            yield K, Scheme.B, m
        yield K, Scheme.C, 2


@lru_cache(maxsize=None)
def worst_case_runs(shuffles: int = 20) -> tuple:
    """(K, scheme, param, load, per-shuffle bound, envelope) for every full-derangement shuffle."""
    out = []
    for K, scheme, param in _worst_case_cases():
        rng = random.Random(1000 * K + (param or 0))
        a = Assignment.identity(K, 1)
        state, units = fresh_state(scheme, param, K, 1, a, seed=K)
        x = storage_point(scheme, K, param)
        for _ in range(shuffles):
            a_next = gen_shuffle("full", K, 1, rng, a)
            assert is_full_derangement(a, a_next)
            sizes = realized_sizes(state)
            plan, _, state = shuffle_once(scheme, state, units, a_next)
            bound = per_shuffle_lower_bound(sizes, batch_derangement(a, a_next), a, state.B)
            out.append((K, scheme, param, plan.load().normalized, bound, converse_envelope_at(K, x)))
            a = a_next
    return tuple(out)


@criterion(4, "measured load equals the closed form on full derangements, K in [3..8]")
def formula_equality() -> list[str]:
    return [
        f"K={K} {scheme.value}({param}): measured {load}, formula {scheme_load_formula(scheme, K, param)}"
        for K, scheme, param, load, _, _ in worst_case_runs()
        if load != scheme_load_formula(scheme, K, param)
    ]


@criterion(5, "measured load respects the per-shuffle bound and the converse envelope")
def converse_consistency() -> list[str]:
    problems = []
    for K, scheme, param, load, bound, envelope in worst_case_runs():
        tag = f"K={K} {scheme.value}({param})"
        if load < bound:
            problems.append(f"{tag}: load {load} below per-shuffle bound {bound}")
        if load < envelope:
            problems.append(f"{tag}: load {load} below converse {envelope}")
        tight = scheme is Scheme.UNCODED or (scheme is Scheme.B and param in (K - 2, K - 1))
        if tight:
            m = 1 if scheme is Scheme.UNCODED else param
            if load != converse_corner(K, m):
                problems.append(f"{tag}: load {load} differs from converse corner {converse_corner(K, m)}")
    return problems


def segment_limit(K: int, m: int) -> Fraction:
    if m == 1:
        return Fraction(4, 3)
    if m == 2:
        return 1 - Fraction(1, K) + Fraction(1, 2)
    if m <= K - 3:
        return 1 - Fraction(1, K) + Fraction(1, m - 1)
    return Fraction(1)


def corner_grid(K: int) -> list[Fraction]:
    return sorted({Fraction(m) for m in range(1, K + 1)} | {c.storage for c in combined_corners(K)})


@criterion(6, "optimality gap within the per-segment limits for K in [5..10], max <= 3/2")
def gap_per_segment() -> list[str]:
    problems = []
    for K in range(5, 11):
        grid = corner_grid(K)
        for m in range(1, K):
            limit = segment_limit(K, m)
            for x in (x for x in grid if m <= x <= m + 1):
                gap = optimality_gap(K, x)
                if m >= K - 2 and gap != 1:
                    problems.append(f"K={K} M/q={x}: gap {gap}, expected 1")
                elif gap > limit:
                    problems.append(f"K={K} segment m={m}, M/q={x}: gap {gap} exceeds {limit}")
        worst = max(optimality_gap(K, x) for x in rational_grid(K, 24))
        if worst > Fraction(3, 2):
            problems.append(f"K={K}: gap {worst} exceeds 3/2")
    return problems


@criterion(7, "peer-to-peer cost <= 2, and K/(K-1) where the combined scheme is optimal")
def p2p_costs() -> list[str]:
    problems = []
    for K in range(2, 11):
        for x in rational_grid(K, 24):
            cost = p2p_cost(K, x)
            if cost > 2:
                problems.append(f"K={K} M/q={x}: cost {cost} > 2")
            if (K <= 4 or x >= K - 2) and cost != Fraction(K, K - 1):
                problems.append(f"K={K} M/q={x}: cost {cost}, expected {Fraction(K, K - 1)}")
    return problems


@lru_cache(maxsize=None)
def random_session_stats(per_scheme: int = 100) -> tuple[tuple[str, ...], int, int]:
    failures, idle_epochs, sessions = [], 0, 0
    rng = random.Random(2024)
    for scheme in (Scheme.UNCODED, Scheme.A, Scheme.B, Scheme.C):
        for n in range(per_scheme):
            K, q = rng.randint(3, 6), rng.randint(1, 2)
            param = {
                Scheme.UNCODED: None,
                Scheme.A: rng.randint(1, K - 1),
                Scheme.B: rng.choice([K - 2, K - 1, K]),
                Scheme.C: 2,
            }[scheme]
            cfg = SimConfig(K, q, minimal_block_size(scheme, K, param), 5, scheme, param, "random", rng.getrandbits(32))
            try:
                report = run_session(cfg)
            except VerificationError as exc:
                failures.append(f"{scheme.value}({param}) K={K} q={q}: {exc}")
                continue
            sessions += 1
            idle_epochs += sum(not e.full_derangement for e in report.epochs)
    return tuple(failures), idle_epochs, sessions


@criterion(8, "100 random sessions per scheme verify bit-exactly (K in 3..6, q in 1..2, T=5)")
def end_to_end() -> list[str]:
    failures, idle_epochs, sessions = random_session_stats()
    problems = list(failures)
    if sessions != 400:
        problems.append(f"only {sessions} of 400 sessions completed")
    if idle_epochs == 0:
        problems.append("no epoch left any worker with a unit it already had")
    return problems


@criterion(9, "embedded index-coding baseline over converse is 2(K-1)/K")
def baseline_ratio() -> list[str]:
    problems = []
    for K in range(3, 11):
        for m in range(1, K + 1):
            base, conv = embedded_ic_baseline(K, m), converse_corner(K, m)
            ok = base == conv == 0 if m == K else base / conv == Fraction(2 * (K - 1), K)
            if not ok:
                problems.append(f"K={K} m={m}: {base} vs {conv}")
    return problems


def _curve(K: int) -> list[dict[str, str]]:
    with tempfile.TemporaryDirectory() as tmp:
        with contextlib.redirect_stdout(io.StringIO()):
            code = cli.main(["curve", "--k", str(K), "--out", tmp])
        if code != 0:
            raise RuntimeError(f"curve --k {K} exited with {code}")
        with open(Path(tmp) / "curve.csv", newline="") as fh:
            return list(csv.DictReader(fh))


@criterion(10, "curve output: K=4 optimal everywhere, K=8 optimal exactly on {1} and [6,8]")
def tradeoff_curves() -> list[str]:
    problems = []
    for row in _curve(4):
        if row["load_over_q"] != row["converse_over_q"]:
            problems.append(f"K=4 M/q={row['M_over_q']}: {row['load_over_q']} vs {row['converse_over_q']}")
    rows8 = _curve(8)
    vertices = {c.storage for c in combined_corners(8)}
    for row in rows8:
        x = Fraction(row["M_over_q"])
        load, conv = Fraction(row["load_over_q"]), Fraction(row["converse_over_q"])
        if load != combined_load(8, x):
            problems.append(f"K=8 M/q={x}: curve {load} vs planner {combined_load(8, x)}")
        if x in vertices and row["source"] != "measured":
            problems.append(f"K=8 M/q={x}: corner not measured")
        optimal = x == 1 or x >= 6
        if optimal and load != conv:
            problems.append(f"K=8 M/q={x}: expected optimal, {load} vs {conv}")
        if not optimal and load <= conv:
            problems.append(f"K=8 M/q={x}: expected strictly above the converse")
    return problems


def report_line(number: int, failures: list[str]) -> str:
    title = CRITERIA[number][0]
    if not failures:
        return f"PASS criterion {number}: {title}"
    more = f" (+{len(failures) - 1} more)" if len(failures) > 1 else ""
    return f"FAIL criterion {number}: {title} -- {failures[0]}{more}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    failures = CRITERIA[number][1]()
    with capsys.disabled():
        print("\n" + report_line(number, failures))
    assert not failures, "\n".join(failures)


if __name__ == "__main__":
    results = {n: CRITERIA[n][1]() for n in sorted(CRITERIA)}
    for n, failures in results.items():
        print(report_line(n, failures))
    sys.exit(1 if any(results.values()) else 0)
