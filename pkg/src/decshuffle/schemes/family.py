"""Delivery of a family of index-coding cliques V_J held by one candidate sender."""

from __future__ import annotations

from typing import Sequence

from ..layout import StorageState, SubBlockKey
from .messages import Transmitter, fmt_set


def send_family(
    tx: Transmitter,
    state: StorageState,
    family: Sequence[tuple[frozenset[int], list[SubBlockKey]]],
    candidates: Sequence[int],
    demander: dict[int, int],
) -> None:
    """Send every V_J in ``family`` (pairs of J and its component keys).

    A candidate that stores every component sends them.  When each worker
    demanding something here already knows one V_J in full, pairwise
    differences V_J1 + V_Ji suffice; otherwise each V_J goes out on its own.
    Without a capable candidate the components are sent bare by any holder.
    """
    family = [(J, [c for c in comps if state.exists(c)]) for J, comps in family]
    family = [(J, comps) for J, comps in family if comps]
    if not family:
        return
    keys = [c for _, comps in family for c in comps]
    sender = next((u for u in candidates if all(state.holds(u, c) for c in keys)), None)
    if sender is None:
        for c in keys:
            holder = min(k for k in range(1, state.K + 1) if state.holds(k, c))
            tx.send(holder, [c], f"bare{c}")
        return
    receivers = {demander[c.unit] for c in keys}

    def knows_one(k: int) -> bool:
        return any(all(state.holds(k, c) for c in comps) for _, comps in family)

    if len(family) >= 2 and all(knows_one(k) for k in receivers):
        J1, first = family[0]
        for J, comps in family[1:]:
            tx.send(sender, first + comps, f"V{fmt_set(J1)}+V{fmt_set(J)}")
    else:
        for J, comps in family:
            tx.send(sender, comps, f"V{fmt_set(J)}")
