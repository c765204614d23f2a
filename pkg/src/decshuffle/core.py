"""Identifiers, bit blocks, assignments and block-size arithmetic."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

Rational = Fraction


class Scheme(str, enum.Enum):
    UNCODED = "uncoded"
    A = "a"
    B = "b"
    C = "c"
    COMBINED = "combined"

    @classmethod
    def parse(cls, text: str | "Scheme") -> "Scheme":
        if isinstance(text, Scheme):
            return text
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown scheme {text!r}") from None


@dataclass(frozen=True)
class BitBlock:
    """Exact-length bit string.

    Bit ``i`` (counting from the start of the string) is stored in bit ``i`` of
    ``value``, so zero-extension on the right never changes ``value``.
    """

    value: int
    length: int

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("negative length")
        if self.value < 0 or self.value >> self.length:
            raise ValueError("value does not fit in declared length")

    @classmethod
    def empty(cls) -> "BitBlock":
        return cls(0, 0)

    @classmethod
    def zeros(cls, length: int) -> "BitBlock":
        return cls(0, length)

    @classmethod
    def from_str(cls, bits: str) -> "BitBlock":
        value = 0
        for i, ch in enumerate(bits):
            if ch == "1":
                value |= 1 << i
            elif ch != "0":
                raise ValueError(f"bad bit {ch!r}")
        return cls(value, len(bits))

    def __str__(self) -> str:
        return "".join("1" if (self.value >> i) & 1 else "0" for i in range(self.length))

    def __len__(self) -> int:
        return self.length

    def __xor__(self, other: "BitBlock") -> "BitBlock":
        return xor_zero_pad(self, other)

    def slice(self, start: int, length: int) -> "BitBlock":
        if start < 0 or length < 0 or start + length > self.length:
            raise ValueError("slice out of range")
        return BitBlock((self.value >> start) & ((1 << length) - 1), length)

    def truncate(self, length: int) -> "BitBlock":
        """Keep the first ``length`` bits; the dropped tail must be zero."""
        if self.value >> length:
            raise ValueError("non-zero bits beyond truncation point")
        return BitBlock(self.value, length)

    def hex(self) -> str:
        """Hex of the bits packed most-significant-first into bytes."""
        nbytes = (self.length + 7) // 8
        out = bytearray(nbytes)
        for i in range(self.length):
            if (self.value >> i) & 1:
                out[i // 8] |= 0x80 >> (i % 8)
        return out.hex()


def xor_zero_pad(a: BitBlock, b: BitBlock) -> BitBlock:
    return BitBlock(a.value ^ b.value, max(a.length, b.length))


def xor_all(blocks: Iterable[BitBlock]) -> BitBlock:
    value, length = 0, 0
    for blk in blocks:
        value ^= blk.value
        length = max(length, blk.length)
    return BitBlock(value, length)


def concat(blocks: Iterable[BitBlock]) -> BitBlock:
    value, length = 0, 0
    for blk in blocks:
        value |= blk.value << length
        length += blk.length
    return BitBlock(value, length)


@dataclass(frozen=True)
class Assignment:
    """Batches of data units per worker; ``batches[k-1]`` belongs to worker k."""

    batches: tuple[frozenset[int], ...]
    epoch: int = 0

    @classmethod
    def of(cls, batches: Sequence[Iterable[int]] | Mapping[int, Iterable[int]], epoch: int = 0) -> "Assignment":
        if isinstance(batches, Mapping):
            k_max = max(batches) if batches else 0
            seq = [batches.get(k, ()) for k in range(1, k_max + 1)]
        else:
            seq = list(batches)
        return cls(tuple(frozenset(b) for b in seq), epoch)

    @classmethod
    def from_units(cls, units: Sequence[int], epoch: int = 0) -> "Assignment":
        """q=1 shorthand: ``units[k-1]`` is the unit held by worker k."""
        return cls(tuple(frozenset((u,)) for u in units), epoch)

    @classmethod
    def identity(cls, K: int, q: int) -> "Assignment":
        return cls(tuple(frozenset(range(k * q + 1, (k + 1) * q + 1)) for k in range(K)))

    @property
    def K(self) -> int:
        return len(self.batches)

    @property
    def q(self) -> int:
        return len(self.batches[0]) if self.batches else 0

    def batch(self, k: int) -> frozenset[int]:
        return self.batches[k - 1]

    def owner_map(self) -> dict[int, int]:
        return {i: k for k, batch in enumerate(self.batches, start=1) for i in batch}

    def owner(self, unit: int) -> int:
        for k, batch in enumerate(self.batches, start=1):
            if unit in batch:
                return k
        raise KeyError(unit)

    def with_epoch(self, epoch: int) -> "Assignment":
        return Assignment(self.batches, epoch)

    def same_batches(self, other: "Assignment") -> bool:
        return self.batches == other.batches

    def __str__(self) -> str:
        return "(" + ",".join("{" + ",".join(map(str, sorted(b))) + "}" for b in self.batches) + ")"


def validate_assignment(a: Assignment, K: int, q: int) -> str | None:
    """Return None when ``a`` partitions [K*q] into K batches of q, else the first violation."""
    if len(a.batches) != K:
        return f"size: expected {K} batches, got {len(a.batches)}"
    for k, batch in enumerate(a.batches, start=1):
        if len(batch) != q:
            return f"size: worker {k} holds {len(batch)} units, expected {q}"
    seen: dict[int, int] = {}
    for k, batch in enumerate(a.batches, start=1):
        for i in batch:
            if i in seen:
                return f"overlap: unit {i} assigned to workers {seen[i]} and {k}"
            seen[i] = k
    N = K * q
    stray = sorted(i for i in seen if not 1 <= i <= N)
    if stray or len(seen) != N:
        missing = sorted(set(range(1, N + 1)) - set(seen))
        return f"coverage: units outside [1..{N}] {stray}, missing {missing}"
    return None


def check_assignment(a: Assignment, K: int, q: int) -> None:
    problem = validate_assignment(a, K, q)
    if problem is not None:
        raise ValueError(f"invalid assignment: {problem}")


def scheme_param_range(scheme: Scheme, K: int) -> range:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.UNCODED:
        return range(1, 2)
    if scheme is Scheme.A:
        return range(1, K)
    if scheme is Scheme.B:
        return range(max(1, K - 2), K + 1)
    if scheme is Scheme.C:
        return range(2, 3) if K >= 3 else range(0)
    raise ValueError(f"no integer parameter for {scheme.value}")


def check_param(scheme: Scheme, K: int, param: int) -> None:
    if K < 2:
        raise ValueError("need at least two workers")
    if param not in scheme_param_range(scheme, K):
        raise ValueError(f"parameter {param} out of range for scheme {Scheme.parse(scheme).value} at K={K}")


def minimal_block_size(scheme: Scheme | str, K: int, param: int | None = None) -> int:
    """Smallest B for which every sub-block and sub-piece is a whole number of bits."""
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.UNCODED:
        return 1
    if scheme is Scheme.C and param is None:
        param = 2
    if param is None:
        raise ValueError("parameter required")
    check_param(scheme, K, param)
    if scheme is Scheme.A:
        return param * comb(K, param)
    if scheme is Scheme.C:
        return 3 * (K - 1)
    m = param
    if m == K:
        return 1
    if m == K - 1:
        return (K - 1) ** 2
    # m = K-2: sub-blocks, further cut into K-2 pieces when one worker is idle
    return comb(K - 1, m - 1) * (K - 2)
