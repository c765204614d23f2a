from __future__ import annotations

from itertools import combinations

from ..core import Assignment
from ..groups import Group, decompose_groups, idle_set
from ..layout import StorageState, SubBlockKey
from .family import send_family
from .messages import ShufflePlan, Transmitter
from .scheme_b import clique

PIECES = 3


class CounterExhausted(RuntimeError):
    """A sub-block was asked for a fourth piece."""


def encode_scheme_c(state: StorageState, a_next: Assignment) -> ShufflePlan:
    """m = 2: pair-by-pair delivery with each sub-block cut into three pieces."""
    if state.kind.family != "BC" or state.kind.param != 2:
        raise ValueError("Scheme C needs a family-BC layout with m=2")
    if state.K < 3:
        raise ValueError("Scheme C needs K >= 3")
    if state.sub_bits % PIECES:
        raise ValueError(f"B={state.B} is not divisible by {PIECES * (state.K - 1)}")
    tx = Transmitter(state)
    counters: dict[SubBlockKey, int] = {}
    groups = decompose_groups(state.assignment, a_next)
    for group in groups:
        _group(tx, state, group, counters)
    return tx.plan("c", groups, counters)


def _group(tx: Transmitter, state: StorageState, group: Group, counters: dict[SubBlockKey, int]) -> None:
    K = state.K
    U = idle_set(group)
    # sub-blocks also stored by an idle worker u: that worker serves them centrally
    for u in sorted(U):
        Js = [frozenset(J) for J in combinations(range(1, K + 1), 3) if frozenset(J) & U == {u}]
        send_family(tx, state, [(J, clique(group, J, U)) for J in Js], [u], group.demander)
    active = [k for k in range(1, K + 1) if k not in U]
    src = {k: group.source(k) for k in active}
    dem = {k: group.demanded(k) for k in active}

    def take(unit: int, owners: set[int]) -> SubBlockKey:
        key = SubBlockKey(unit, frozenset(owners))
        n = counters.get(key, 0) + 1
        if n > PIECES:
            raise CounterExhausted(f"{key} asked for piece {n}")
        counters[key] = n
        return key.part(n, PIECES)

    for a in active:
        for b in active:
            if b in (a, src[a]):
                continue
            tag = f"pair({a},{b})"
            if src[b] != a:
                x1 = take(dem[a], {src[a], b})
                x3 = take(dem[a], {src[a], src[b]})
                x2 = take(dem[b], {src[b], a})
                tx.send(src[a], [x1, x3], tag)
                tx.send(src[b], [x2, x3], tag)
            else:
                c = src[a]
                d = src[c]
                x1 = take(dem[a], {c, b})
                x2 = take(dem[a], {c, d})
                x3 = take(dem[c], {a, d})
                tx.send(c, [x1], tag)
                tx.send(d, [x2, x3], tag)

    expected = {SubBlockKey(dem[k], frozenset({src[k], b})) for k in active for b in active if b not in (k, src[k])}
    uneven = sorted(key for key in expected if counters.get(key) != PIECES)
    if uneven:
        raise CounterExhausted(f"pieces of {', '.join(map(str, uneven))} not each sent once")
