"""Shared fixtures-by-function for the test modules."""

from __future__ import annotations

import random
from itertools import combinations

from decshuffle.core import Assignment, BitBlock, Scheme, minimal_block_size
from decshuffle.layout import build_layout, init_storage, update_storage
from decshuffle.schemes import audit, decode_worker, encode
from decshuffle.sim import layout_kind

SINGLE_SCHEMES = (Scheme.UNCODED, Scheme.A, Scheme.B, Scheme.C)


def params_for(scheme: Scheme, K: int) -> list[int | None]:
    if scheme is Scheme.UNCODED:
        return [None]
    if scheme is Scheme.A:
        return list(range(1, K))
    if scheme is Scheme.B:
        return [m for m in (K - 2, K - 1, K) if m >= 1]
    return [2] if K >= 3 else []


def random_units(N: int, B: int, seed: int = 0) -> dict[int, BitBlock]:
    rng = random.Random(seed)
    return {i: BitBlock(rng.getrandbits(B), B) for i in range(1, N + 1)}


def random_assignment(K: int, q: int, rng: random.Random) -> Assignment:
    units = list(range(1, K * q + 1))
    rng.shuffle(units)
    return Assignment.of([units[k * q : (k + 1) * q] for k in range(K)])


def fresh_state(scheme: Scheme, param, K: int, q: int, a_prev: Assignment, B: int | None = None, seed: int = 0):
    B = B or minimal_block_size(scheme, K, param)
    units = random_units(K * q, B, seed)
    kind = layout_kind(scheme, param)
    return init_storage(build_layout(kind, K, q, a_prev), units), units


def shuffle_once(scheme: Scheme, state, units, a_next):
    """Encode, audit, decode and update; returns (plan, recovered, new_state)."""
    plan = encode(scheme, state, a_next)
    assert audit(plan, state) == []
    recovered = {k: decode_worker(k, state, plan.messages, a_next) for k in range(1, state.K + 1)}
    for k in range(1, state.K + 1):
        for i in a_next.batch(k):
            assert state.reassemble(k, i, recovered[k]) == units[i]
    return plan, recovered, update_storage(state, a_next, recovered)


def derangements(K: int) -> list[tuple[int, ...]]:
    from itertools import permutations

    return [p for p in permutations(range(1, K + 1)) if all(p[k] != k + 1 for k in range(K))]


def subsets(items, sizes):
    for r in sizes:
        yield from combinations(items, r)
