"""Lower bounds, centralized baselines and gap ratios (all values are per q)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .core import Assignment
from .layout import SubBlockKey
from .schemes.formulas import combined_load


def _check_m(K: int, m: int) -> None:
    if K < 2 or not 1 <= m <= K:
        raise ValueError(f"m={m} outside [1..{K}]")


def _check_x(K: int, x: Fraction) -> Fraction:
    x = Fraction(x)
    if not 1 <= x <= K:
        raise ValueError(f"M/q={x} outside [1, {K}]")
    return x


@dataclass(frozen=True)
class BoundCurve:
    """Piecewise-linear curve through corners sorted by storage."""

    corners: tuple[tuple[Fraction, Fraction], ...]

    def at(self, x: Fraction | int | str) -> Fraction:
        x = Fraction(x)
        pts = self.corners
        if not pts[0][0] <= x <= pts[-1][0]:
            raise ValueError(f"{x} outside [{pts[0][0]}, {pts[-1][0]}]")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return pts[-1][1]

    def second_differences(self) -> list[Fraction]:
        slopes = [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(self.corners, self.corners[1:])]
        return [s1 - s0 for s0, s1 in zip(slopes, slopes[1:])]


def converse_corner(K: int, m: int) -> Fraction:
    _check_m(K, m)
    return Fraction((K - m) * K, m * (K - 1))


def converse_curve(K: int) -> BoundCurve:
    return BoundCurve(tuple((Fraction(m), converse_corner(K, m)) for m in range(1, K + 1)))


def converse_envelope_at(K: int, M_over_q: Fraction | int | str) -> Fraction:
    return converse_curve(K).at(_check_x(K, M_over_q))


def per_shuffle_lower_bound(
    sizes: Mapping[SubBlockKey | tuple[int, frozenset[int]], int],
    d: Sequence[int] | Mapping[int, int],
    a_prev: Assignment,
    B: int,
) -> Fraction:
    """Load lower bound for the shuffle in which worker k takes over the batch of worker d_k.

    ``sizes`` gives, per unit and holder set W, the bits of the unit stored by
    exactly W.  Each such piece contributes |F_{i,W}| / |W| for every worker k
    outside W that must receive unit i.
    """
    K = a_prev.K
    dmap = dict(d) if isinstance(d, Mapping) else {k: d[k - 1] for k in range(1, K + 1)}
    if sorted(dmap) != list(range(1, K + 1)) or sorted(dmap.values()) != list(range(1, K + 1)):
        raise ValueError("d is not a permutation of the workers")
    if any(dmap[k] == k for k in dmap):
        raise ValueError("d has a fixed point")
    receiver = {i: k for k in range(1, K + 1) for i in a_prev.batch(dmap[k])}
    owner = a_prev.owner_map()
    total = Fraction(0)
    for key, bits in sizes.items():
        unit, W = (key.unit, key.owners) if isinstance(key, SubBlockKey) else key
        W = frozenset(W)
        if bits < 0 or not W or not W <= set(range(1, K + 1)) or unit not in owner:
            raise ValueError(f"malformed size entry {key!r}: {bits}")
        k = receiver[unit]
        if k not in W and owner[unit] in W:
            total += Fraction(bits, len(W))
    return total / B


@dataclass(frozen=True)
class StorageProfile:
    """x[m] = fraction of all bits stored by exactly m workers."""

    x: Mapping[int, Fraction]

    def check(self, K: int, M_over_q: Fraction | None = None) -> None:
        if any(not 1 <= m <= K for m in self.x) or any(v < 0 for v in self.x.values()):
            raise ValueError("profile entries out of range")
        if sum(self.x.values()) != 1:
            raise ValueError("profile does not sum to one")
        if M_over_q is not None and sum(m * v for m, v in self.x.items()) > Fraction(M_over_q):
            raise ValueError("profile exceeds the storage budget")


def profile_bound(K: int, p: StorageProfile, M_over_q: Fraction | int | str | None = None) -> Fraction:
    p.check(K, None if M_over_q is None else Fraction(M_over_q))
    return sum((Fraction(v) * converse_corner(K, m) for m, v in p.x.items()), Fraction(0))


def centralized_bounds(K: int, m_or_g: int) -> tuple[Fraction, Fraction]:
    """(converse at M/q=m, achievable load at M/q=1+g(K-1)/K) for the server-based setting."""
    _check_m(K, m_or_g)
    return Fraction(K - m_or_g, m_or_g), Fraction(K - m_or_g, m_or_g + 1)


def centralized_curve(K: int) -> BoundCurve:
    return BoundCurve(tuple((Fraction(m), Fraction(K - m, m)) for m in range(1, K + 1)))


def embedded_ic_baseline(K: int, m: int) -> Fraction:
    _check_m(K, m)
    return Fraction(2 * (K - m), m)


def embedded_curve(K: int) -> BoundCurve:
    return BoundCurve(tuple((Fraction(m), embedded_ic_baseline(K, m)) for m in range(1, K + 1)))


def _ratio(num: Callable[[Fraction], Fraction], den: Callable[[Fraction], Fraction], K: int, x: Fraction) -> Fraction:
    # At M/q = K both sides vanish; on [K-1, K] both are linear with a common
    # zero at K, so the ratio there equals its value at K-1.
    if x == K:
        x = Fraction(K - 1)
    return num(x) / den(x)


def optimality_gap(K: int, M_over_q: Fraction | int | str) -> Fraction:
    x = _check_x(K, M_over_q)
    return _ratio(lambda v: combined_load(K, v), lambda v: converse_envelope_at(K, v), K, x)


def p2p_cost(K: int, M_over_q: Fraction | int | str) -> Fraction:
    x = _check_x(K, M_over_q)
    return _ratio(lambda v: combined_load(K, v), centralized_curve(K).at, K, x)


def rational_grid(K: int, max_den: int = 24) -> list[Fraction]:
    """All M/q in [1, K] whose reduced denominator is at most ``max_den``."""
    pts = {Fraction(n, d) for d in range(1, max_den + 1) for n in range(d, K * d + 1)}
    return sorted(pts)
