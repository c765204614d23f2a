"""Split a shuffle into q groups in which every worker demands one unit and owned one unit."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Mapping

from .core import Assignment
from .layout import SubBlockKey


@dataclass(frozen=True)
class Group:
    units: tuple[int, ...]
    demander: Mapping[int, int]  # unit -> worker assigned it now
    owner: Mapping[int, int]  # unit -> worker assigned it before

    @property
    def K(self) -> int:
        return len(self.units)

    def demanded(self, k: int) -> int:
        """The unit of this group assigned to worker k in the new epoch."""
        for i in self.units:
            if self.demander[i] == k:
                return i
        raise KeyError(k)

    def source(self, k: int) -> int:
        """Previous owner of the unit worker k demands."""
        return self.owner[self.demanded(k)]

    def is_valid(self) -> bool:
        workers = set(range(1, self.K + 1))
        return (
            set(self.demander.values()) == workers
            and set(self.owner.values()) == workers
            and len(set(self.units)) == self.K
        )


def demand_owner_matrix(a_prev: Assignment, a_cur: Assignment) -> list[list[int]]:
    """counts[k-1][j-1] = units assigned to k now that j held before."""
    K = a_cur.K
    prev = a_prev.owner_map()
    counts = [[0] * K for _ in range(K)]
    for k, batch in enumerate(a_cur.batches, start=1):
        for i in batch:
            counts[k - 1][prev[i] - 1] += 1
    return counts


def decompose_groups(a_prev: Assignment, a_cur: Assignment) -> list[Group]:
    """Peel q perfect matchings off the demand-owner multigraph.

    Each matching is found with augmenting paths, visiting demanders in
    increasing order and their candidate units lowest id first, so the output
    is fully deterministic.
    """
    K, q = a_cur.K, a_cur.q
    prev = a_prev.owner_map()
    cur = a_cur.owner_map()
    remaining = set(cur)
    groups = []
    for _ in range(q):
        edges = {k: sorted(i for i in remaining if cur[i] == k) for k in range(1, K + 1)}
        matched: dict[int, int] = {}  # previous owner -> unit

        def augment(k: int, seen: set[int]) -> bool:
            for i in edges[k]:
                j = prev[i]
                if j in seen:
                    continue
                seen.add(j)
                if j not in matched or augment(cur[matched[j]], seen):
                    matched[j] = i
                    return True
            return False

        for k in range(1, K + 1):
            if not augment(k, set()):
                raise RuntimeError("demand-owner multigraph has no perfect matching")
        units = tuple(sorted(matched.values()))
        groups.append(Group(units, {i: cur[i] for i in units}, {i: prev[i] for i in units}))
        remaining -= set(units)
    return groups


def idle_set(g: Group) -> frozenset[int]:
    """Workers whose demanded unit is one they already held."""
    return frozenset(g.demander[i] for i in g.units if g.demander[i] == g.owner[i])


def split_sets(g: Group, m: int) -> dict[frozenset[int], set[SubBlockKey]]:
    """Partition the missing demanded sub-blocks by which idle workers store them."""
    U = idle_set(g)
    K = g.K
    out: dict[frozenset[int], set[SubBlockKey]] = {}
    for k in range(1, K + 1):
        if k in U:
            continue
        d, o = g.demanded(k), g.source(k)
        others = [j for j in range(1, K + 1) if j not in (o, k)]
        for rest in combinations(others, m - 1):
            w = frozenset(rest) | {o}
            out.setdefault(frozenset(w & U), set()).add(SubBlockKey(d, w))
    return out
