"""Per-worker decoding by Gaussian elimination over GF(2).

Each message is one linear equation: the XOR of its components (right-padded
with zeros) equals the payload.  Components the worker stores are folded into
the right-hand side; the rest are unknowns.  Peeling one unknown at a time is
the special case where an equation has a single unknown; the elimination also
handles V_J differences, where a worker first learns a sum of several unknowns.
"""

from __future__ import annotations

from typing import Sequence

from ..core import Assignment, BitBlock, concat
from ..layout import StorageState, SubBlockKey, missing_subblocks
from .messages import BroadcastMessage, DecodeError


def solve(state: StorageState, k: int, messages: Sequence[BroadcastMessage]) -> dict[SubBlockKey, BitBlock]:
    """Every component worker k can pin down from the broadcast."""
    index: dict[SubBlockKey, int] = {}
    names: list[SubBlockKey] = []
    basis: dict[int, list[int]] = {}  # pivot bit -> [mask, rhs]
    for n, msg in enumerate(messages):
        mask, rhs = 0, msg.payload.value
        for c in msg.components:
            if state.holds(k, c):
                rhs ^= state.bits(k, c).value
            else:
                if c not in index:
                    index[c] = len(names)
                    names.append(c)
                mask ^= 1 << index[c]
        while mask:
            top = mask.bit_length() - 1
            if top not in basis:
                basis[top] = [mask, rhs]
                break
            mask ^= basis[top][0]
            rhs ^= basis[top][1]
        else:
            if rhs:
                raise DecodeError(f"worker {k}: message {n} from {msg.sender} contradicts the others")
    # back-substitute: a reduced lower row holds no pivot other than its own
    pivots = sorted(basis)
    for n, top in enumerate(pivots):
        row = basis[top]
        for low in pivots[:n]:
            if (row[0] >> low) & 1:
                row[0] ^= basis[low][0]
                row[1] ^= basis[low][1]
    known = {}
    for top, (mask, rhs) in basis.items():
        if mask == 1 << top:
            key = names[top]
            length = state.length(key)
            if rhs >> length:
                raise DecodeError(f"worker {k}: {key} decodes to more bits than it has")
            known[key] = BitBlock(rhs, length)
    return known


def decode_worker(
    k: int, state: StorageState, messages: Sequence[BroadcastMessage], a_next: Assignment
) -> dict[SubBlockKey, BitBlock]:
    """Recover every sub-block of k's new units that k does not already store."""
    known = solve(state, k, messages)
    pieces: dict[SubBlockKey, dict[int, BitBlock]] = {}
    parts: dict[SubBlockKey, set[int]] = {}
    for key, blk in known.items():
        if key.piece is not None:
            pieces.setdefault(key.whole, {})[key.piece] = blk
            parts.setdefault(key.whole, set()).add(key.parts)
    out = {}
    for key in missing_subblocks(state, k, a_next):
        if key in known:
            out[key] = known[key]
            continue
        split = parts.get(key, set())
        if len(split) == 1 and len(pieces[key]) == (n := next(iter(split))):
            out[key] = concat(pieces[key][p] for p in range(1, n + 1))
        else:
            raise DecodeError(f"worker {k} cannot recover {key}")
    return out
