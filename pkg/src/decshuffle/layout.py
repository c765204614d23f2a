"""Storage layouts for the two placement families and their per-epoch updates.

Family "A" (parameter g): every unit is cut into C(K,g) sub-blocks, one per
g-subset W of workers, independent of who is assigned the unit.  A worker keeps
every sub-block of its own units and the sub-blocks whose W contains it.

Family "BC" (parameter m): every unit is cut into C(K-1,m-1) sub-blocks, one per
m-subset W containing the unit's current assignee.  A worker keeps the
sub-blocks whose W contains it, which includes all of its own units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Mapping

from .core import Assignment, BitBlock, check_assignment, concat


@dataclass(frozen=True)
class LayoutKind:
    family: str  # "A" or "BC"
    param: int

    def __post_init__(self) -> None:
        if self.family not in ("A", "BC"):
            raise ValueError(f"unknown layout family {self.family!r}")

    def check(self, K: int) -> None:
        lo, hi = (1, K - 1) if self.family == "A" else (1, K)
        if not lo <= self.param <= hi:
            name = "g" if self.family == "A" else "m"
            raise ValueError(f"{name}={self.param} outside [{lo}..{hi}] for K={K}")

    def subblocks_per_unit(self, K: int) -> int:
        if self.family == "A":
            return comb(K, self.param)
        return comb(K - 1, self.param - 1)

    def storage_over_q(self, K: int) -> Fraction:
        """Per-worker storage M/q implied by the layout."""
        if self.family == "A":
            return 1 + Fraction(self.param * (K - 1), K)
        return Fraction(self.param)

    def __str__(self) -> str:
        return f"A(g={self.param})" if self.family == "A" else f"BC(m={self.param})"


def scheme_a(g: int) -> LayoutKind:
    return LayoutKind("A", g)


def scheme_bc(m: int) -> LayoutKind:
    return LayoutKind("BC", m)


@dataclass(frozen=True, order=False)
class SubBlockKey:
    """A sub-block of ``unit`` labelled by ``owners``; ``piece`` is a 1-based slot of a ``parts``-way split."""

    unit: int
    owners: frozenset[int]
    piece: int | None = None
    parts: int = 1

    def __post_init__(self) -> None:
        if self.piece is not None and not 1 <= self.piece <= self.parts:
            raise ValueError("piece out of range")

    @property
    def whole(self) -> "SubBlockKey":
        return SubBlockKey(self.unit, self.owners) if self.piece is not None else self

    def part(self, piece: int, parts: int) -> "SubBlockKey":
        return SubBlockKey(self.unit, self.owners, piece, parts)

    def sort_key(self) -> tuple:
        return (self.unit, tuple(sorted(self.owners)), self.piece or 0, self.parts)

    def __lt__(self, other: "SubBlockKey") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        base = f"F{self.unit}{{{','.join(map(str, sorted(self.owners)))}}}"
        return base if self.piece is None else f"{base}#{self.piece}/{self.parts}"


def owner_sets(kind: LayoutKind, K: int, assignee: int) -> list[frozenset[int]]:
    """Owner sets of one unit in canonical (lexicographic) order."""
    if kind.family == "A":
        return [frozenset(w) for w in combinations(range(1, K + 1), kind.param)]
    others = [k for k in range(1, K + 1) if k != assignee]
    sets = [tuple(sorted(c + (assignee,))) for c in combinations(others, kind.param - 1)]
    return [frozenset(w) for w in sorted(sets)]


@dataclass(frozen=True)
class StorageLayout:
    kind: LayoutKind
    K: int
    q: int
    assignment: Assignment
    holdings: tuple[frozenset[SubBlockKey], ...]

    @property
    def epoch(self) -> int:
        return self.assignment.epoch

    def held(self, k: int) -> frozenset[SubBlockKey]:
        return self.holdings[k - 1]

    def storage_over_q(self) -> Fraction:
        return self.kind.storage_over_q(self.K)


def build_layout(kind: LayoutKind, K: int, q: int, a: Assignment) -> StorageLayout:
    kind.check(K)
    check_assignment(a, K, q)
    owner = a.owner_map()
    holdings: list[set[SubBlockKey]] = [set() for _ in range(K)]
    for i in range(1, K * q + 1):
        for w in owner_sets(kind, K, owner[i]):
            key = SubBlockKey(i, w)
            holders = set(w) | {owner[i]}
            for k in holders:
                holdings[k - 1].add(key)
    return StorageLayout(kind, K, q, a, tuple(frozenset(h) for h in holdings))


def build_layout_a(K: int, q: int, g: int, a: Assignment) -> StorageLayout:
    return build_layout(scheme_a(g), K, q, a)


def build_layout_bc(K: int, q: int, m: int, a: Assignment) -> StorageLayout:
    return build_layout(scheme_bc(m), K, q, a)


@dataclass(frozen=True)
class StorageState:
    """Layout plus the bits each worker holds.

    ``slots[i][W]`` is the position of sub-block (i, W) in the unit's bit string.
    It starts lexicographic and is carried along when family-BC updates
    relabel owner sets.
    """

    layout: StorageLayout
    B: int
    contents: Mapping[tuple[int, SubBlockKey], BitBlock]
    slots: Mapping[int, Mapping[frozenset[int], int]] = field(repr=False)

    @property
    def K(self) -> int:
        return self.layout.K

    @property
    def q(self) -> int:
        return self.layout.q

    @property
    def kind(self) -> LayoutKind:
        return self.layout.kind

    @property
    def assignment(self) -> Assignment:
        return self.layout.assignment

    @property
    def sub_bits(self) -> int:
        return self.B // self.kind.subblocks_per_unit(self.K)

    def exists(self, key: SubBlockKey) -> bool:
        """False for owner sets that carry no bits (W missing the unit's assignee)."""
        return key.owners in self.slots.get(key.unit, {})

    def length(self, key: SubBlockKey) -> int:
        if not self.exists(key):
            return 0
        if key.piece is None:
            return self.sub_bits
        if self.sub_bits % key.parts:
            raise ValueError(f"sub-block of {self.sub_bits} bits cannot be cut into {key.parts} pieces")
        return self.sub_bits // key.parts

    def holds(self, k: int, key: SubBlockKey) -> bool:
        return key.whole in self.layout.held(k)

    def bits(self, k: int, key: SubBlockKey) -> BitBlock:
        """Bits of ``key`` as seen by worker k; raises KeyError if k does not hold it."""
        if not self.exists(key):
            return BitBlock.empty()
        whole = self.contents[(k, key.whole)]
        if key.piece is None:
            return whole
        n = self.length(key)
        return whole.slice((key.piece - 1) * n, n)

    def unit_keys(self, unit: int) -> list[SubBlockKey]:
        order = self.slots[unit]
        return [SubBlockKey(unit, w) for w in sorted(order, key=order.__getitem__)]

    def held_bits(self, k: int) -> int:
        return sum(self.contents[(k, key)].length for key in self.layout.held(k))

    def reassemble(self, k: int, unit: int, extra: Mapping[SubBlockKey, BitBlock] | None = None) -> BitBlock:
        """Concatenate worker k's copy of ``unit`` in slot order (``extra`` fills gaps)."""
        parts = []
        for key in self.unit_keys(unit):
            if (k, key) in self.contents:
                parts.append(self.contents[(k, key)])
            elif extra is not None and key in extra:
                parts.append(extra[key])
            else:
                raise KeyError(f"worker {k} lacks {key}")
        return concat(parts)


def init_storage(layout: StorageLayout, units: Mapping[int, BitBlock]) -> StorageState:
    N = layout.K * layout.q
    if sorted(units) != list(range(1, N + 1)):
        raise ValueError(f"expected units 1..{N}")
    lengths = {blk.length for blk in units.values()}
    if len(lengths) != 1:
        raise ValueError("data units differ in size")
    B = lengths.pop()
    if B <= 0:
        raise ValueError("block size must be positive")
    nsub = layout.kind.subblocks_per_unit(layout.K)
    if B % nsub:
        raise ValueError(f"B={B} is not divisible by the {nsub} sub-blocks per unit")
    L = B // nsub
    owner = layout.assignment.owner_map()
    slots = {
        i: {w: s for s, w in enumerate(owner_sets(layout.kind, layout.K, owner[i]))}
        for i in range(1, N + 1)
    }
    contents = {}
    for k in range(1, layout.K + 1):
        for key in layout.held(k):
            contents[(k, key)] = units[key.unit].slice(slots[key.unit][key.owners] * L, L)
    return StorageState(layout, B, contents, slots)


Recovered = Mapping[int, Mapping[SubBlockKey, BitBlock]]


def _fill(state: StorageState, new_layout: StorageLayout, recovered: Recovered, source) -> dict:
    contents = {}
    for k in range(1, state.K + 1):
        got = recovered.get(k, {})
        for key in new_layout.held(k):
            old = source(key)
            if (k, old) in state.contents:
                contents[(k, key)] = state.contents[(k, old)]
            elif old in got:
                blk = got[old]
                if blk.length != state.sub_bits:
                    raise ValueError(f"recovered {old} for worker {k} has wrong length")
                contents[(k, key)] = blk
            else:
                raise KeyError(f"missing recovered sub-block {old} for worker {k}")
    return contents


def update_storage_a(state: StorageState, a_next: Assignment, recovered: Recovered) -> StorageState:
    """Family A: keep the fixed part, evict departing units, insert arriving ones."""
    if state.kind.family != "A":
        raise ValueError("state is not a family-A layout")
    new_layout = build_layout(state.kind, state.K, state.q, a_next)
    contents = _fill(state, new_layout, recovered, lambda key: key)
    return StorageState(new_layout, state.B, contents, state.slots)


def relabel(owners: frozenset[int], old: int, new: int) -> frozenset[int]:
    """Owner set of a family-BC sub-block after its unit moves from ``old`` to ``new``."""
    if new in owners:
        return owners
    return (owners - {old}) | {new}


def update_storage_bc(state: StorageState, a_next: Assignment, recovered: Recovered) -> StorageState:
    """Family BC: arriving units are kept whole; a departing unit is cut back to
    what its new assignee already held, and owner sets are relabelled so the
    result is again the canonical layout of ``a_next``."""
    if state.kind.family != "BC":
        raise ValueError("state is not a family-BC layout")
    new_layout = build_layout(state.kind, state.K, state.q, a_next)
    old_owner = state.assignment.owner_map()
    new_owner = a_next.owner_map()
    slots = {}
    back: dict[tuple[int, frozenset[int]], frozenset[int]] = {}
    for i, order in state.slots.items():
        o, n = old_owner[i], new_owner[i]
        slots[i] = {}
        for w, s in order.items():
            w2 = relabel(w, o, n)
            slots[i][w2] = s
            back[(i, w2)] = w
    contents = _fill(
        state, new_layout, recovered, lambda key: SubBlockKey(key.unit, back[(key.unit, key.owners)])
    )
    return StorageState(new_layout, state.B, contents, slots)


def update_storage(state: StorageState, a_next: Assignment, recovered: Recovered) -> StorageState:
    if state.kind.family == "A":
        return update_storage_a(state, a_next, recovered)
    return update_storage_bc(state, a_next, recovered)


def missing_subblocks(state: StorageState, k: int, a_next: Assignment) -> list[SubBlockKey]:
    """Sub-blocks of units newly assigned to k that k does not hold yet."""
    out = []
    for i in sorted(a_next.batch(k)):
        out.extend(key for key in state.unit_keys(i) if not state.holds(k, key))
    return out


def realized_sizes(state: StorageState) -> dict[tuple[int, frozenset[int]], int]:
    """Bits of each unit stored by exactly the given set of workers."""
    sizes: dict[tuple[int, frozenset[int]], int] = {}
    for i in state.slots:
        for key in state.unit_keys(i):
            holders = frozenset(k for k in range(1, state.K + 1) if state.holds(k, key))
            sizes[(i, holders)] = sizes.get((i, holders), 0) + state.sub_bits
    return sizes


def dump_state(state: StorageState) -> list[str]:
    """One ``worker<TAB>key<TAB>hex`` line per held sub-block, canonically sorted."""
    lines = []
    for k in range(1, state.K + 1):
        for key in sorted(state.layout.held(k)):
            lines.append(f"{k}\t{key}\t{state.contents[(k, key)].hex()}")
    return lines


def layout_table(layout: StorageLayout) -> dict[int, list[str]]:
    """Human-readable holdings per worker, e.g. ``G1{1,2}`` (``F`` for family BC)."""
    letter = "G" if layout.kind.family == "A" else "F"
    return {
        k: [f"{letter}{key.unit}{{{','.join(map(str, sorted(key.owners)))}}}" for key in sorted(layout.held(k))]
        for k in range(1, layout.K + 1)
    }

