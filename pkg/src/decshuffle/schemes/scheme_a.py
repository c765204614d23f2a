from __future__ import annotations

from itertools import combinations

from ..core import Assignment
from ..layout import StorageState, SubBlockKey
from .messages import ShufflePlan, Transmitter, fmt_set


def rank(worker: int, owners: frozenset[int]) -> int:
    """1-based position of ``worker`` inside ``owners``; used as the piece index."""
    return sorted(owners).index(worker) + 1


def encode_scheme_a(state: StorageState, a_next: Assignment, g: int | None = None) -> ShufflePlan:
    """For every (g+1)-set J and j in J, worker j XORs its share of what each other member of J lacks."""
    if state.kind.family != "A":
        raise ValueError("Scheme A needs a family-A layout")
    g = state.kind.param if g is None else g
    if g != state.kind.param:
        raise ValueError("g does not match the layout")
    K = state.K
    prev = state.assignment
    arriving = {k: sorted(a_next.batch(k) - prev.batch(k)) for k in range(1, K + 1)}
    tx = Transmitter(state)
    for J in combinations(range(1, K + 1), g + 1):
        Jset = frozenset(J)
        for j in J:
            others = [k for k in J if k != j]
            # one message per layer: the l-th arriving unit of every other member
            depth = max(len(arriving[k]) for k in others)
            for layer in range(depth):
                comps = []
                for k in others:
                    if layer < len(arriving[k]):
                        w = Jset - {k}
                        comps.append(SubBlockKey(arriving[k][layer], w, rank(j, w), g))
                tx.send(j, comps, f"J{fmt_set(J)}")
    return tx.plan("a")
