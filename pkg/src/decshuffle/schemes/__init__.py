from __future__ import annotations

from ..core import Assignment, Scheme
from ..layout import StorageState
from .decoder import decode_worker, solve
from .formulas import (
    Corner,
    MixturePart,
    candidate_corners,
    combined_corners,
    combined_load,
    combined_plan,
    mixture_block_size,
    scheme_load_formula,
    split_bits,
    storage_point,
)
from .messages import (
    BroadcastMessage,
    DecodeError,
    EncodingError,
    LoadReport,
    ShufflePlan,
    audit,
    trace_lines,
)
from .scheme_a import encode_scheme_a
from .scheme_b import encode_scheme_b
from .scheme_c import CounterExhausted, encode_scheme_c
from .uncoded import encode_uncoded


def encode(scheme: Scheme | str, state: StorageState, a_next: Assignment) -> ShufflePlan:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.UNCODED:
        return encode_uncoded(state, a_next)
    if scheme is Scheme.A:
        return encode_scheme_a(state, a_next)
    if scheme is Scheme.B:
        return encode_scheme_b(state, a_next)
    if scheme is Scheme.C:
        return encode_scheme_c(state, a_next)
    raise ValueError(f"{scheme.value} is not a single encoder")


__all__ = [
    "BroadcastMessage",
    "Corner",
    "CounterExhausted",
    "DecodeError",
    "EncodingError",
    "LoadReport",
    "MixturePart",
    "ShufflePlan",
    "audit",
    "candidate_corners",
    "combined_corners",
    "combined_load",
    "combined_plan",
    "decode_worker",
    "encode",
    "encode_scheme_a",
    "encode_scheme_b",
    "encode_scheme_c",
    "encode_uncoded",
    "mixture_block_size",
    "scheme_load_formula",
    "solve",
    "split_bits",
    "storage_point",
    "trace_lines",
]
