"""Closed-form worst-case loads and the memory-sharing planner."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from ..core import Scheme, check_param, minimal_block_size


def scheme_load_formula(scheme: Scheme | str, K: int, param: int | None = None) -> Fraction:
    """Worst-case load per q (R/q)."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.UNCODED:
        return Fraction(K)
    if scheme is Scheme.C:
        param = 2 if param is None else param
    if param is None:
        raise ValueError("parameter required")
    check_param(scheme, K, param)
    if scheme is Scheme.A:
        return Fraction(K - param, param)
    if scheme is Scheme.B:
        return Fraction((K - param) * K, param * (K - 1))
    if scheme is Scheme.C:
        return Fraction(2 * K * (K - 2), 3 * (K - 1))
    raise ValueError(f"no closed form for {scheme.value}")


def storage_point(scheme: Scheme | str, K: int, param: int | None = None) -> Fraction:
    """M/q used by a scheme."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.UNCODED:
        return Fraction(1)
    if scheme is Scheme.A:
        return 1 + Fraction(param * (K - 1), K)
    if scheme is Scheme.C:
        return Fraction(2)
    return Fraction(param)


@dataclass(frozen=True)
class Corner:
    storage: Fraction  # M/q
    load: Fraction  # R/q
    scheme: Scheme
    param: int

    @property
    def label(self) -> str:
        if self.scheme is Scheme.UNCODED:
            return "uncoded"
        if self.scheme is Scheme.C:
            return "C"
        name = "g" if self.scheme is Scheme.A else "m"
        return f"{self.scheme.value.upper()}({name}={self.param})"


def candidate_corners(K: int) -> list[Corner]:
    """Achievable points: uncoded at 1, C at 2, A for g in [2:K-3], B for m in [K-2:K]."""
    if K < 2:
        raise ValueError("need at least two workers")
    pts = [Corner(Fraction(1), Fraction(K), Scheme.UNCODED, 1)]
    if K >= 3:
        pts.append(Corner(Fraction(2), scheme_load_formula(Scheme.C, K), Scheme.C, 2))
    for g in range(2, K - 2):
        pts.append(Corner(storage_point(Scheme.A, K, g), scheme_load_formula(Scheme.A, K, g), Scheme.A, g))
    for m in range(max(1, K - 2), K + 1):
        pts.append(Corner(Fraction(m), scheme_load_formula(Scheme.B, K, m), Scheme.B, m))
    best: dict[Fraction, Corner] = {}
    for p in pts:
        if p.storage not in best or p.load < best[p.storage].load:
            best[p.storage] = p
    return [best[x] for x in sorted(best)]


def combined_corners(K: int) -> list[Corner]:
    """Vertices of the lower convex envelope of the achievable points (collinear points kept)."""
    hull: list[Corner] = []
    for p in candidate_corners(K):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (b.storage - a.storage) * (p.load - a.load) - (b.load - a.load) * (p.storage - a.storage)
            if cross < 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


@dataclass(frozen=True)
class MixturePart:
    corner: Corner
    weight: Fraction


def combined_plan(K: int, M_over_q: Fraction | int | str) -> list[MixturePart]:
    """One corner, or two neighbouring corners with the fraction of each unit they handle."""
    x = Fraction(M_over_q)
    if not 1 <= x <= K:
        raise ValueError(f"M/q={x} outside [1, {K}]")
    hull = combined_corners(K)
    for c in hull:
        if c.storage == x:
            return [MixturePart(c, Fraction(1))]
    for lo, hi in zip(hull, hull[1:]):
        if lo.storage < x < hi.storage:
            alpha = (hi.storage - x) / (hi.storage - lo.storage)
            return [MixturePart(lo, alpha), MixturePart(hi, 1 - alpha)]
    raise AssertionError("unreachable: hull spans [1, K]")


def combined_load(K: int, M_over_q: Fraction | int | str) -> Fraction:
    return sum((p.weight * p.corner.load for p in combined_plan(K, M_over_q)), Fraction(0))


def part_block_unit(corner: Corner, K: int) -> int:
    return minimal_block_size(corner.scheme, K, corner.param)


def mixture_block_size(K: int, M_over_q: Fraction | int | str) -> int:
    """Smallest B that gives every part of the mixture a whole, divisible share of each unit."""
    plan = combined_plan(K, M_over_q)
    if len(plan) == 1:
        return part_block_unit(plan[0].corner, K)
    (p1, p2) = plan
    a, b = p1.weight.numerator, p1.weight.denominator
    u1, u2 = part_block_unit(p1.corner, K), part_block_unit(p2.corner, K)
    t1, t2 = u1 // gcd(u1, a), u2 // gcd(u2, b - a)
    return b * t1 * t2 // gcd(t1, t2)


def split_bits(K: int, M_over_q: Fraction | int | str, B: int) -> list[tuple[MixturePart, int]]:
    """Bits of each unit given to each part; raises if B does not split exactly."""
    plan = combined_plan(K, M_over_q)
    out = []
    for part in plan:
        share = part.weight * B
        unit = part_block_unit(part.corner, K)
        if share.denominator != 1 or share.numerator % unit:
            raise ValueError(f"B={B} does not split into whole blocks for {part.corner.label}")
        out.append((part, int(share)))
    return out
