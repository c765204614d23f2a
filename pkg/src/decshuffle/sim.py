"""Multi-epoch sessions: shuffle, encode, broadcast, decode, update, verify."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .bounds import converse_envelope_at, per_shuffle_lower_bound
from .core import Assignment, BitBlock, Scheme, check_assignment, check_param, minimal_block_size
from .layout import (
    LayoutKind,
    StorageState,
    build_layout,
    init_storage,
    realized_sizes,
    scheme_a,
    scheme_bc,
    update_storage,
)
from .schemes import (
    DecodeError,
    EncodingError,
    audit,
    combined_load,
    combined_plan,
    decode_worker,
    encode,
    mixture_block_size,
    scheme_load_formula,
    split_bits,
    trace_lines,
)
from .schemes.scheme_c import CounterExhausted

PRNG_ID = "python-random-mt19937"
SHUFFLE_MODES = ("worst", "cyclic", "random", "full", "identity", "scripted")


class ConfigError(ValueError):
    """The configuration cannot be run (range or divisibility)."""


class VerificationError(RuntimeError):
    def __init__(self, epoch: int, worker: int | None, constraint: str, detail: str = ""):
        self.epoch, self.worker, self.constraint, self.detail = epoch, worker, constraint, detail
        who = "" if worker is None else f" worker {worker}"
        super().__init__(f"epoch {epoch}{who}: {constraint} failed{': ' + detail if detail else ''}")


def layout_kind(scheme: Scheme | str, param: int | None) -> LayoutKind:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.UNCODED:
        return scheme_bc(1)
    if scheme is Scheme.A:
        return scheme_a(param)
    if scheme is Scheme.B:
        return scheme_bc(param)
    if scheme is Scheme.C:
        return scheme_bc(2)
    raise ValueError(f"no single layout for {scheme.value}")


@dataclass(frozen=True)
class SimConfig:
    K: int
    q: int
    B: int
    T: int
    scheme: Scheme
    param: Fraction | int | None = None  # g, m, or M/q for the combined scheme
    shuffle: str = "worst"
    seed: int = 0
    script: tuple[Assignment, ...] = ()
    initial: Assignment | None = None

    def block_unit(self) -> int:
        if self.scheme is Scheme.COMBINED:
            return mixture_block_size(self.K, self.param)
        return minimal_block_size(self.scheme, self.K, self.param)

    def validate(self) -> None:
        if self.K < 2 or self.q < 1 or self.T < 1:
            raise ConfigError("need K >= 2, q >= 1, T >= 1")
        if self.shuffle not in SHUFFLE_MODES:
            raise ConfigError(f"unknown shuffle mode {self.shuffle!r}")
        if self.shuffle == "scripted" and len(self.script) < self.T:
            raise ConfigError("script shorter than the number of epochs")
        try:
            if self.scheme is Scheme.COMBINED:
                combined_plan(self.K, self.param)
            elif self.scheme is not Scheme.UNCODED:
                check_param(self.scheme, self.K, int(self.param) if self.param is not None else -1)
            unit = self.block_unit()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.B <= 0 or self.B % unit:
            raise ConfigError(f"divisibility: B={self.B} must be a positive multiple of {unit}")
        if self.initial is not None:
            try:
                check_assignment(self.initial, self.K, self.q)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @property
    def storage_over_q(self) -> Fraction:
        if self.scheme is Scheme.COMBINED:
            return Fraction(self.param)
        return layout_kind(self.scheme, self.param).storage_over_q(self.K)

    def worst_case_over_q(self) -> Fraction:
        if self.scheme is Scheme.COMBINED:
            return combined_load(self.K, self.param)
        return scheme_load_formula(self.scheme, self.K, self.param)


def random_derangement(K: int, rng: random.Random) -> list[int]:
    """Uniform derangement of [1..K] by rejection; ``d[k-1]`` is d_k."""
    while True:
        d = list(range(1, K + 1))
        rng.shuffle(d)
        if all(d[k - 1] != k for k in range(1, K + 1)):
            return d


def permute_batches(a_prev: Assignment, d: Sequence[int]) -> Assignment:
    """Worker k takes over the batch of worker d_k."""
    return Assignment(tuple(a_prev.batch(j) for j in d))


def gen_shuffle(mode: str, K: int, q: int, seed: int | random.Random, a_prev: Assignment) -> Assignment:
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    if mode == "worst":
        return permute_batches(a_prev, random_derangement(K, rng))
    if mode == "cyclic":
        return permute_batches(a_prev, [k % K + 1 for k in range(1, K + 1)])
    if mode == "identity":
        return Assignment(a_prev.batches)
    if mode == "random":
        units = list(range(1, K * q + 1))
        rng.shuffle(units)
        return Assignment.of([units[k * q : (k + 1) * q] for k in range(K)])
    if mode == "full":
        while True:
            a = gen_shuffle("random", K, q, rng, a_prev)
            if is_full_derangement(a_prev, a):
                return a
    raise ValueError(f"unknown shuffle mode {mode!r}")


def is_full_derangement(a_prev: Assignment, a_next: Assignment) -> bool:
    return all(not (a_prev.batch(k) & a_next.batch(k)) for k in range(1, a_prev.K + 1))


def batch_derangement(a_prev: Assignment, a_next: Assignment) -> list[int] | None:
    """d with A^t_k = A^{t-1}_{d_k} and d_k != k, if the shuffle is of that form."""
    where = {batch: j for j, batch in enumerate(a_prev.batches, start=1)}
    d = []
    for k, batch in enumerate(a_next.batches, start=1):
        j = where.get(batch)
        if j is None or j == k:
            return None
        d.append(j)
    return d


@dataclass
class Track:
    """One storage scheme run on a contiguous share of every unit."""

    scheme: Scheme
    param: int
    offset: int
    bits: int
    state: StorageState

    @property
    def label(self) -> str:
        return self.scheme.value if self.scheme is Scheme.UNCODED else f"{self.scheme.value}{self.param}"


CHECKS = ("decode", "encoder-audit", "storage-size", "stored-content", "structural-invariance", "load-formula", "bound-consistency")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    assignment: Assignment
    per_worker_bits: dict[int, int]
    total_bits: int
    load: Fraction  # normalized by B
    worst_case: Fraction  # q times the closed form
    lower_bound: Fraction | None
    converse: Fraction | None
    full_derangement: bool
    verdicts: dict[str, str]


@dataclass
class SessionReport:
    config: SimConfig
    prng: str
    epochs: list[EpochRecord] = field(default_factory=list)
    trace: list[str] = field(default_factory=list)

    @property
    def worst_load(self) -> Fraction:
        return max((e.load for e in self.epochs), default=Fraction(0))

    @property
    def verdicts(self) -> dict[str, str]:
        """A check passes if it ran in at least one epoch (failures raise)."""
        return {
            name: "pass" if any(e.verdicts.get(name) == "pass" for e in self.epochs) else "n/a" for name in CHECKS
        }


def _make_tracks(cfg: SimConfig, units: dict[int, BitBlock], a0: Assignment) -> list[Track]:
    if cfg.scheme is Scheme.COMBINED:
        shares = [(p.corner.scheme, p.corner.param, n) for p, n in split_bits(cfg.K, cfg.param, cfg.B)]
    else:
        shares = [(cfg.scheme, int(cfg.param) if cfg.param is not None else 1, cfg.B)]
    tracks, offset = [], 0
    for scheme, param, nbits in shares:
        kind = layout_kind(scheme, param)
        part = {i: blk.slice(offset, nbits) for i, blk in units.items()}
        state = init_storage(build_layout(kind, cfg.K, cfg.q, a0), part)
        tracks.append(Track(scheme, param, offset, nbits, state))
        offset += nbits
    return tracks


def make_units(K: int, q: int, B: int, rng: random.Random) -> dict[int, BitBlock]:
    return {i: BitBlock(rng.getrandbits(B), B) for i in range(1, K * q + 1)}


def _step_track(track: Track, units: dict[int, BitBlock], a_next: Assignment, epoch: int, cfg: SimConfig):
    state = track.state
    truth = {i: blk.slice(track.offset, track.bits) for i, blk in units.items()}
    try:
        plan = encode(track.scheme, state, a_next)
    except (EncodingError, CounterExhausted) as exc:
        raise VerificationError(epoch, None, "encoder-audit", str(exc)) from None
    problems = audit(plan, state)
    if problems:
        raise VerificationError(epoch, plan.messages[0].sender, "encoder-audit", problems[0])
    recovered = {}
    for k in range(1, cfg.K + 1):
        try:
            recovered[k] = decode_worker(k, state, plan.messages, a_next)
        except DecodeError as exc:
            raise VerificationError(epoch, k, "decode", str(exc)) from None
        for i in sorted(a_next.batch(k)):
            if state.reassemble(k, i, recovered[k]) != truth[i]:
                raise VerificationError(epoch, k, "decode", f"unit {i} differs from ground truth")
    new = update_storage(state, a_next, recovered)
    budget = state.kind.storage_over_q(cfg.K) * cfg.q * track.bits
    canonical = build_layout(state.kind, cfg.K, cfg.q, a_next)
    for k in range(1, cfg.K + 1):
        if new.held_bits(k) > budget:
            raise VerificationError(epoch, k, "storage-size", f"{new.held_bits(k)} > {budget} bits")
        if new.layout.held(k) != canonical.held(k):
            raise VerificationError(epoch, k, "structural-invariance", "holdings differ from the canonical layout")
        L = new.sub_bits
        for key in new.layout.held(k):
            if new.contents[(k, key)] != truth[key.unit].slice(new.slots[key.unit][key.owners] * L, L):
                raise VerificationError(epoch, k, "stored-content", f"{key} differs from the unit's bits")
        for i in a_next.batch(k):
            if new.reassemble(k, i) != truth[i]:
                raise VerificationError(epoch, k, "stored-content", f"unit {i} not reconstructible")
    track.state = new
    return plan, realized_sizes(state)


def run_session(cfg: SimConfig, units: dict[int, BitBlock] | None = None) -> SessionReport:
    """Run ``cfg.T`` epochs; any failed check raises VerificationError."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    if units is None:
        units = make_units(cfg.K, cfg.q, cfg.B, rng)
    a = (cfg.initial or Assignment.identity(cfg.K, cfg.q)).with_epoch(0)
    tracks = _make_tracks(cfg, units, a)
    report = SessionReport(cfg, PRNG_ID)
    x = cfg.storage_over_q
    worst = cfg.q * cfg.worst_case_over_q()
    for t in range(1, cfg.T + 1):
        if cfg.shuffle == "scripted":
            a_next = cfg.script[t - 1]
        else:
            a_next = gen_shuffle(cfg.shuffle, cfg.K, cfg.q, rng, a)
        a_next = a_next.with_epoch(t)
        check_assignment(a_next, cfg.K, cfg.q)
        per = {k: 0 for k in range(1, cfg.K + 1)}
        sizes_by_track = []
        for track in tracks:
            plan, sizes = _step_track(track, units, a_next, t, cfg)
            sizes_by_track.append(sizes)
            for k, bits in plan.load().per_worker_bits.items():
                per[k] += bits
            report.trace.extend(trace_lines(plan, t, track.label if len(tracks) > 1 else ""))
        total = sum(per.values())
        load = Fraction(total, cfg.B)
        full = is_full_derangement(a, a_next)
        verdicts = {name: "pass" for name in CHECKS}
        if load > worst or (full and load != worst):
            raise VerificationError(t, None, "load-formula", f"measured {load}, worst case {worst}")
        converse = cfg.q * converse_envelope_at(cfg.K, x) if full else None
        if converse is not None and load < converse:
            raise VerificationError(t, None, "bound-consistency", f"load {load} below converse {converse}")
        d = batch_derangement(a, a_next)
        lower = None
        if d is not None:
            lower = sum(
                (per_shuffle_lower_bound(sizes, d, a, cfg.B) for sizes in sizes_by_track), Fraction(0)
            )
            if load < lower:
                raise VerificationError(t, None, "bound-consistency", f"load {load} below per-shuffle bound {lower}")
        if converse is None and lower is None:
            verdicts["bound-consistency"] = "n/a"
        report.epochs.append(EpochRecord(t, a_next, per, total, load, worst, lower, converse, full, verdicts))
        a = a_next
    return report
