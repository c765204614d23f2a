from __future__ import annotations

from itertools import combinations

from ..core import Assignment
from ..groups import Group, decompose_groups, idle_set
from ..layout import StorageState, SubBlockKey
from .family import send_family
from .messages import ShufflePlan, Transmitter, fmt_set
from .scheme_a import rank


def encode_scheme_b(state: StorageState, a_next: Assignment, m: int | None = None) -> ShufflePlan:
    if state.kind.family != "BC":
        raise ValueError("Scheme B needs a family-BC layout")
    K = state.K
    m = state.kind.param if m is None else m
    if m != state.kind.param:
        raise ValueError("m does not match the layout")
    tx = Transmitter(state)
    if m == K:
        return tx.plan("b")
    if m == K - 1:
        _one_short(tx, state, a_next)
        return tx.plan("b")
    if m == K - 2:
        groups = decompose_groups(state.assignment, a_next)
        for group in groups:
            _two_short_group(tx, state, group)
        return tx.plan("b", groups)
    raise ValueError(f"Scheme B covers m in {{K-2, K-1, K}}, got m={m} at K={K}")


def _one_short(tx: Transmitter, state: StorageState, a_next: Assignment) -> None:
    """m = K-1: worker k lacks only F_{i,[K]\\{k}}; every other worker sends one piece of it."""
    K = state.K
    everyone = frozenset(range(1, K + 1))
    prev = state.assignment
    arriving = {k: sorted(a_next.batch(k) - prev.batch(k)) for k in range(1, K + 1)}
    for j in range(1, K + 1):
        others = [k for k in range(1, K + 1) if k != j]
        depth = max(len(arriving[k]) for k in others)
        for layer in range(depth):
            comps = []
            for k in others:
                if layer < len(arriving[k]):
                    w = everyone - {k}
                    comps.append(SubBlockKey(arriving[k][layer], w, rank(j, w), K - 1))
            tx.send(j, comps, f"piece{j}")


def clique(group: Group, J: frozenset[int], skip: frozenset[int] = frozenset()) -> list[SubBlockKey]:
    """Components of V_J: for each k in J, the part of k's demand stored by J minus k."""
    return [SubBlockKey(group.demanded(k), J - {k}) for k in sorted(J) if k not in skip]


def _two_short_group(tx: Transmitter, state: StorageState, group: Group) -> None:
    K = state.K
    U = idle_set(group)
    subsets = sorted({frozenset(J) & U for J in combinations(range(1, K + 1), K - 1)}, key=sorted)
    for part in subsets:
        if not part:
            continue
        Js = [frozenset(J) for J in combinations(range(1, K + 1), K - 1) if frozenset(J) & U == part]
        send_family(tx, state, [(J, clique(group, J, U)) for J in Js], sorted(part), group.demander)
    if len(U) == 1:
        # the remaining K-1 workers form a one-short problem of their own
        J = frozenset(range(1, K + 1)) - U
        for j in sorted(J):
            comps = [
                SubBlockKey(group.demanded(k), J - {k}, rank(j, J - {k}), K - 2) for k in sorted(J) if k != j
            ]
            tx.send(j, comps, f"V{fmt_set(J)}/{j}")
    elif not U:
        for J in combinations(range(1, K + 1), K - 1):
            Jset = frozenset(J)
            sender = next(k for k in J if group.source(k) not in Jset)
            tx.send(sender, clique(group, Jset), f"V{fmt_set(J)}")

