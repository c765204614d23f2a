from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..core import BitBlock, xor_all
from ..layout import StorageState, SubBlockKey


class EncodingError(RuntimeError):
    """A sender referenced bits it does not store."""


class DecodeError(RuntimeError):
    """A worker could not recover everything it needs from the broadcast."""


@dataclass(frozen=True)
class BroadcastMessage:
    sender: int
    components: tuple[SubBlockKey, ...]
    payload: BitBlock
    tag: str

    @property
    def bits(self) -> int:
        return self.payload.length


@dataclass(frozen=True)
class LoadReport:
    per_worker_bits: dict[int, int]
    total_bits: int
    B: int

    @property
    def normalized(self) -> Fraction:
        return Fraction(self.total_bits, self.B)


@dataclass(frozen=True)
class ShufflePlan:
    scheme: str
    K: int
    B: int
    messages: tuple[BroadcastMessage, ...]
    groups: tuple = ()
    piece_counts: dict[SubBlockKey, int] = field(default_factory=dict, compare=False)

    def by_sender(self) -> dict[int, list[BroadcastMessage]]:
        out: dict[int, list[BroadcastMessage]] = {k: [] for k in range(1, self.K + 1)}
        for msg in self.messages:
            out[msg.sender].append(msg)
        return out

    def load(self) -> LoadReport:
        per = {k: sum(m.bits for m in msgs) for k, msgs in self.by_sender().items()}
        return LoadReport(per, sum(per.values()), self.B)


class Transmitter:
    """Builds messages strictly from each sender's own stored bits."""

    def __init__(self, state: StorageState):
        self.state = state
        self.messages: list[BroadcastMessage] = []

    def send(self, sender: int, components: Iterable[SubBlockKey], tag: str) -> BroadcastMessage | None:
        comps = tuple(c for c in components if self.state.exists(c))
        if not comps:
            return None
        try:
            payload = xor_all(self.state.bits(sender, c) for c in comps)
        except KeyError as exc:
            raise EncodingError(f"worker {sender} does not store {exc.args[0][1]}") from None
        msg = BroadcastMessage(sender, comps, payload, tag)
        self.messages.append(msg)
        return msg

    def plan(self, scheme: str, groups: Sequence = (), piece_counts=None) -> ShufflePlan:
        return ShufflePlan(scheme, self.state.K, self.state.B, tuple(self.messages), tuple(groups), piece_counts or {})


def audit(plan: ShufflePlan, state: StorageState) -> list[str]:
    """Re-check that every component is stored by its sender and payloads are honest."""
    problems = []
    for n, msg in enumerate(plan.messages):
        for c in msg.components:
            if not state.holds(msg.sender, c):
                problems.append(f"message {n}: sender {msg.sender} does not hold {c}")
        if not problems:
            expect = xor_all(state.bits(msg.sender, c) for c in msg.components)
            if expect != msg.payload:
                problems.append(f"message {n}: payload differs from XOR of its components")
    return problems


def fmt_set(workers: Iterable[int]) -> str:
    return "{" + ",".join(map(str, sorted(workers))) + "}"


def trace_lines(plan: ShufflePlan, epoch: int, label: str = "") -> list[str]:
    """epoch, sender, tag, components, payload bits, payload hex; tab separated."""
    return [
        "\t".join(
            (str(epoch), str(m.sender), f"{label}:{m.tag}" if label else m.tag, "+".join(map(str, m.components)), str(m.bits), m.payload.hex() or "-")
        )
        for m in plan.messages
    ]
