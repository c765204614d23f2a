"""Reference data from the worked examples and a replay of each against the library."""

from __future__ import annotations

import random
import re
from collections import Counter
from fractions import Fraction

from .bounds import per_shuffle_lower_bound
from .core import Assignment, BitBlock
from .groups import decompose_groups, idle_set, split_sets
from .layout import build_layout, build_layout_a, init_storage, layout_table, scheme_bc
from .schemes import DecodeError, audit, decode_worker, encode_scheme_b, encode_scheme_c

LAYOUT_A_K3 = {
    "prev": (3, 1, 2),
    "holdings": {
        1: "G1{1,2} G1{1,3} G2{1,2} G2{1,3} G3{1,2} G3{1,3} G3{2,3}",
        2: "G1{1,2} G1{1,3} G1{2,3} G2{1,2} G2{2,3} G3{1,2} G3{2,3}",
        3: "G1{1,3} G1{2,3} G2{1,2} G2{1,3} G2{2,3} G3{1,3} G3{2,3}",
    },
}

SCHEME_B_K5 = {
    "prev": (5, 1, 2, 3, 4),
    "shuffles": [
        ((1, 2, 3, 4, 5), Fraction(5, 6)),
        ((5, 2, 3, 4, 1), Fraction(13, 18)),
        ((5, 1, 3, 4, 2), Fraction(2, 3)),
    ],
    # first shuffle: which worker sends each V_J
    "senders": {"1234": 4, "1235": 3, "1245": 2, "1345": 1, "2345": 5},
    "idle": {(5, 2, 3, 4, 1): {1}, (5, 1, 3, 4, 2): {1, 2}},
    "splits": {
        (5, 2, 3, 4, 1): {
            (1,): "1{123} 1{124} 2{134} 2{135} 3{124} 3{145} 4{125} 4{135}",
            (): "1{234} 2{345} 3{245} 4{235}",
        },
        (5, 1, 3, 4, 2): {
            (1, 2): "2{123} 3{124} 4{125}",
            (1,): "2{134} 3{145} 4{135}",
            (2,): "2{234} 3{245} 4{235}",
        },
    },
}

# pair, (sender, components) of the first sum, (sender, components) of the second sum
SCHEME_C_K5 = {
    "prev": (5, 1, 2, 3, 4),
    "next": (1, 2, 3, 4, 5),
    "load": Fraction(5, 2),
    "rows": """
        1,3  2: 1{2,3} 1{2,4}   4: 1{2,4} 3{1,4}
        1,4  2: 1{2,4} 1{2,5}   5: 1{2,5} 4{1,5}
        1,5  2: 1{2,5}          3: 1{2,3} 2{1,3}
        2,4  3: 2{3,4} 2{3,5}   5: 2{3,5} 4{2,5}
        2,5  3: 2{3,5} 2{1,3}   1: 2{1,3} 5{1,2}
        2,1  3: 2{1,3}          4: 2{3,4} 3{2,4}
        3,5  4: 3{4,5} 3{1,4}   1: 3{1,4} 5{1,3}
        3,1  4: 3{1,4} 3{2,4}   2: 3{2,4} 1{2,3}
        3,2  4: 3{2,4}          5: 3{4,5} 4{3,5}
        4,1  5: 4{1,5} 4{2,5}   2: 4{2,5} 1{2,4}
        4,2  5: 4{2,5} 4{3,5}   3: 4{3,5} 2{3,4}
        4,3  5: 4{3,5}          1: 4{1,5} 5{1,4}
        5,2  1: 5{1,2} 5{1,3}   3: 5{1,3} 2{3,5}
        5,3  1: 5{1,3} 5{1,4}   4: 5{1,4} 3{4,5}
        5,4  1: 5{1,4}          2: 5{1,2} 1{2,5}
    """,
}

_KEY = re.compile(r"(\d+)\{([\d,]+)\}")


def _keys(text: str) -> list[tuple[int, frozenset[int]]]:
    """Parse ``1{2,3}`` or the compact ``1{23}`` into (unit, owners) pairs."""
    out = []
    for unit, ws in _KEY.findall(text):
        members = ws.split(",") if "," in ws else list(ws)
        out.append((int(unit), frozenset(map(int, members))))
    return out


def scheme_c_schedule_rows() -> list[tuple[tuple[int, int], list[tuple[int, list[tuple[int, frozenset[int]]]]]]]:
    rows = []
    for line in SCHEME_C_K5["rows"].strip().splitlines():
        pair, rest = line.split(None, 1)
        sums = re.findall(r"(\d+):((?:\s*\d+\{[\d,]+\})+)", rest)
        a, b = map(int, pair.split(","))
        rows.append(((a, b), [(int(s), _keys(body)) for s, body in sums]))
    return rows


def reference_sender_multisets() -> dict[int, Counter]:
    out: dict[int, Counter] = {}
    for _, sums in scheme_c_schedule_rows():
        for sender, keys in sums:
            out.setdefault(sender, Counter())[frozenset(Counter(keys).items())] += 1
    return out


def _units(K: int, B: int, seed: int = 0) -> dict[int, BitBlock]:
    rng = random.Random(seed)
    return {i: BitBlock(rng.getrandbits(B), B) for i in range(1, K + 1)}


def _decodes(state, plan, a_next, units) -> bool:
    if audit(plan, state):
        return False
    try:
        for k in range(1, state.K + 1):
            got = decode_worker(k, state, plan.messages, a_next)
            if any(state.reassemble(k, i, got) != units[i] for i in a_next.batch(k)):
                return False
    except (DecodeError, KeyError):
        return False
    return True


def check_layout_a_k3() -> list[str]:
    layout = build_layout_a(3, 1, 2, Assignment.from_units(LAYOUT_A_K3["prev"]))
    got = layout_table(layout)
    return [
        f"layout A K=3 worker {k}: expected {want}, got {' '.join(got[k])}"
        for k, want in LAYOUT_A_K3["holdings"].items()
        if got[k] != want.split()
    ]


def check_scheme_b_k5() -> list[str]:
    problems = []
    prev = Assignment.from_units(SCHEME_B_K5["prev"])
    data = _units(5, 18)
    state = init_storage(build_layout(scheme_bc(3), 5, 1, prev), data)
    for target, want in SCHEME_B_K5["shuffles"]:
        a_next = Assignment.from_units(target)
        plan = encode_scheme_b(state, a_next)
        if not _decodes(state, plan, a_next, data):
            problems.append(f"scheme B K=5 {target}: decoding failed")
        load = plan.load().normalized
        if load != want:
            problems.append(f"scheme B K=5 {target}: load {load}, expected {want}")
        (group,) = decompose_groups(prev, a_next)
        if target in SCHEME_B_K5["idle"] and set(idle_set(group)) != SCHEME_B_K5["idle"][target]:
            problems.append(f"scheme B K=5 {target}: idle set {sorted(idle_set(group))}")
        if target in SCHEME_B_K5["splits"]:
            got = split_sets(group, 3)
            for part, text in SCHEME_B_K5["splits"][target].items():
                want_keys = {(u, w) for u, w in _keys(text)}
                have = {(key.unit, key.owners) for key in got.get(frozenset(part), set())}
                if have != want_keys:
                    problems.append(f"scheme B K=5 {target}: split set {set(part) or '{}'} differs")
            if set(got) != {frozenset(p) for p in SCHEME_B_K5["splits"][target]}:
                problems.append(f"scheme B K=5 {target}: unexpected split-set labels")
        if target == (1, 2, 3, 4, 5):
            senders = {"".join(map(str, sorted(_tag_set(m.tag)))): m.sender for m in plan.messages}
            if senders != SCHEME_B_K5["senders"]:
                problems.append(f"scheme B K=5 senders {senders}, expected {SCHEME_B_K5['senders']}")
    return problems


def _tag_set(tag: str) -> set[int]:
    return set(map(int, re.findall(r"\d+", tag)))


def scheme_c_sender_multisets(plan) -> dict[int, Counter]:
    out: dict[int, Counter] = {}
    for m in plan.messages:
        keys = [(c.unit, c.owners) for c in m.components]
        out.setdefault(m.sender, Counter())[frozenset(Counter(keys).items())] += 1
    return out


def check_scheme_c_k5() -> list[str]:
    problems = []
    prev = Assignment.from_units(SCHEME_C_K5["prev"])
    a_next = Assignment.from_units(SCHEME_C_K5["next"])
    units = _units(5, 12)
    state = init_storage(build_layout(scheme_bc(2), 5, 1, prev), units)
    plan = encode_scheme_c(state, a_next)
    if not _decodes(state, plan, a_next, units):
        problems.append("scheme C K=5: decoding failed")
    if plan.load().normalized != SCHEME_C_K5["load"]:
        problems.append(f"scheme C K=5: load {plan.load().normalized}, expected {SCHEME_C_K5['load']}")
    rows = scheme_c_schedule_rows()
    if len(rows) != 15 or sum(len(s) for _, s in rows) != 30 or len(plan.messages) != 30:
        problems.append(f"scheme C K=5: {len(plan.messages)} sums sent, reference lists 30")
    if scheme_c_sender_multisets(plan) != reference_sender_multisets():
        problems.append("scheme C K=5: per-sender component multisets differ")
    if any(n != 3 for n in plan.piece_counts.values()):
        problems.append("scheme C K=5: some sub-block pieces not sent exactly once")
    return problems


def three_worker_bound_expression(size: dict[tuple[int, frozenset[int]], int]) -> Fraction:
    s = lambda i, *w: size.get((i, frozenset(w)), 0)  # noqa: E731
    return s(1, 2) + s(2, 3) + s(3, 1) + Fraction(s(1, 2, 3) + s(2, 1, 3) + s(3, 1, 2), 2)


def check_three_worker_bound(trials: int = 25) -> list[str]:
    prev = Assignment.from_units((3, 1, 2))
    owner = prev.owner_map()
    rng = random.Random(1)
    for _ in range(trials):
        sizes = {}
        for i in (1, 2, 3):
            for W in ({1}, {2}, {3}, {1, 2}, {1, 3}, {2, 3}, {1, 2, 3}):
                if owner[i] in W:
                    sizes[(i, frozenset(W))] = rng.randrange(0, 1000)
        got = per_shuffle_lower_bound(sizes, (2, 3, 1), prev, 1)
        if got != three_worker_bound_expression(sizes):
            return [f"three-worker bound: got {got}, expected {three_worker_bound_expression(sizes)}"]
    return []


def verify_all() -> list[str]:
    return check_layout_a_k3() + check_scheme_b_k5() + check_scheme_c_k5() + check_three_worker_bound()
