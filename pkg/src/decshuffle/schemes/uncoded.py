from __future__ import annotations

from ..core import Assignment
from ..layout import StorageState
from .messages import ShufflePlan, Transmitter


def encode_uncoded(state: StorageState, a_next: Assignment) -> ShufflePlan:
    """The previous owner of each arriving unit broadcasts whatever the new owner lacks."""
    tx = Transmitter(state)
    prev = state.assignment
    for k in range(1, state.K + 1):
        for i in sorted(a_next.batch(k) - prev.batch(k)):
            sender = prev.owner(i)
            need = [key for key in state.unit_keys(i) if not state.holds(k, key)]
            for key in need:
                tx.send(sender, [key], f"unit{i}->{k}")
    return tx.plan("uncoded")
