import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decshuffle.core import Assignment, BitBlock, Scheme
from decshuffle.layout import (
    SubBlockKey,
    build_layout,
    build_layout_a,
    build_layout_bc,
    dump_state,
    init_storage,
    layout_table,
    missing_subblocks,
    relabel,
    scheme_a,
    scheme_bc,
    update_storage,
    update_storage_a,
    update_storage_bc,
)
from helpers import fresh_state, random_assignment, random_units, shuffle_once, subsets


def key(unit, *owners):
    return SubBlockKey(unit, frozenset(owners))


def test_family_a_k3_golden_holdings():
    layout = build_layout_a(3, 1, 2, Assignment.from_units((3, 1, 2)))
    want = {key(1, 1, 2), key(1, 1, 3), key(2, 1, 2), key(2, 1, 3), key(3, 1, 2), key(3, 1, 3), key(3, 2, 3)}
    assert layout.held(1) == want
    assert layout_table(layout)[1][-1] == "G3{2,3}"


@pytest.mark.parametrize("a", [(3, 1, 2), (1, 2, 3), (2, 3, 1)])
def test_family_a_top_parameter_matches_direct_enumeration(a):
    K, g = 3, 2
    layout = build_layout_a(K, 1, g, Assignment.from_units(a))
    for k in range(1, K + 1):
        want = {
            key(i, *W)
            for i in range(1, K + 1)
            for W in subsets(range(1, K + 1), [g])
            if k in W or a[k - 1] == i
        }
        assert layout.held(k) == want


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 2), st.data())
def test_family_a_storage_size(K, q, data):
    g = data.draw(st.integers(1, K - 1))
    B = g * comb(K, g)
    a = random_assignment(K, q, random.Random(data.draw(st.integers(0, 10**6))))
    state = init_storage(build_layout_a(K, q, g, a), random_units(K * q, B))
    for k in range(1, K + 1):
        assert state.held_bits(k) == (1 + Fraction(g * (K - 1), K)) * q * B
        assert len(state.layout.held(k)) == q * comb(K, g) + (K * q - q) * comb(K - 1, g - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 2), st.data())
def test_family_bc_storage_size(K, q, data):
    m = data.draw(st.integers(1, K))
    B = comb(K - 1, m - 1)
    a = random_assignment(K, q, random.Random(data.draw(st.integers(0, 10**6))))
    state = init_storage(build_layout_bc(K, q, m, a), random_units(K * q, B))
    for k in range(1, K + 1):
        assert state.held_bits(k) == m * q * B
        want = q * comb(K - 1, m - 1) + (K * q - q) * (comb(K - 2, m - 2) if m >= 2 else 0)
        assert len(state.layout.held(k)) == want


def test_family_bc_golden_divisions():
    prev = Assignment.from_units((5, 1, 2, 3, 4))
    state = init_storage(build_layout_bc(5, 1, 3, prev), random_units(5, 6))
    assert [str(k) for k in state.unit_keys(1)] == [
        "F1{1,2,3}", "F1{1,2,4}", "F1{1,2,5}", "F1{2,3,4}", "F1{2,3,5}", "F1{2,4,5}"
    ]
    state2 = init_storage(build_layout_bc(5, 1, 2, prev), random_units(5, 4))
    assert [str(k) for k in state2.unit_keys(1)] == ["F1{1,2}", "F1{2,3}", "F1{2,4}", "F1{2,5}"]


def test_family_bc_full_storage():
    layout = build_layout_bc(4, 1, 4, Assignment.identity(4, 1))
    assert scheme_bc(4).subblocks_per_unit(4) == 1
    assert all(layout.held(k) == layout.held(1) for k in range(2, 5))
    assert len(layout.held(1)) == 4


def test_canonical_slicing_and_reassembly():
    units = {1: BitBlock.from_str("110100"), 2: BitBlock.from_str("001011"), 3: BitBlock.from_str("111000")}
    state = init_storage(build_layout_a(3, 1, 2, Assignment.from_units((3, 1, 2))), units)
    assert state.sub_bits == 2
    assert str(state.contents[(1, key(1, 1, 2))]) == "11"
    assert str(state.contents[(1, key(1, 1, 3))]) == "01"
    assert str(state.contents[(2, key(1, 2, 3))]) == "00"
    for k in (1, 2, 3):
        for i in state.assignment.batch(k):
            assert state.reassemble(k, i) == units[i]


def test_init_storage_rejects_bad_inputs():
    layout = build_layout_a(3, 1, 2, Assignment.identity(3, 1))
    with pytest.raises(ValueError):
        init_storage(layout, {i: BitBlock.empty() for i in (1, 2, 3)})
    with pytest.raises(ValueError):
        init_storage(layout, {1: BitBlock.zeros(6), 2: BitBlock.zeros(6), 3: BitBlock.zeros(12)})
    with pytest.raises(ValueError):
        init_storage(layout, {i: BitBlock.zeros(5) for i in (1, 2, 3)})
    with pytest.raises(ValueError):
        init_storage(layout, {i: BitBlock.zeros(6) for i in (1, 2)})


def test_layout_kind_range():
    with pytest.raises(ValueError):
        build_layout(scheme_a(3), 3, 1, Assignment.identity(3, 1))
    with pytest.raises(ValueError):
        build_layout(scheme_bc(0), 3, 1, Assignment.identity(3, 1))


def _truth_recovered(state, a_next, units):
    L = state.sub_bits
    return {
        k: {
            key: units[key.unit].slice(state.slots[key.unit][key.owners] * L, L)
            for key in missing_subblocks(state, k, a_next)
        }
        for k in range(1, state.K + 1)
    }


def test_update_identity_is_noop():
    for kind, B in ((scheme_a(2), 6), (scheme_bc(2), 2)):
        units = random_units(3, B)
        state = init_storage(build_layout(kind, 3, 1, Assignment.from_units((3, 1, 2))), units)
        new = update_storage(state, state.assignment, {})
        assert new.layout.holdings == state.layout.holdings
        assert dict(new.contents) == dict(state.contents)


def test_update_family_a_evicts_and_inserts():
    units = random_units(3, 6)
    state = init_storage(build_layout_a(3, 1, 2, Assignment.from_units((3, 1, 2))), units)
    a_next = Assignment.from_units((1, 2, 3))
    new = update_storage_a(state, a_next, _truth_recovered(state, a_next, units))
    assert state.layout.held(1) - new.layout.held(1) == {key(3, 2, 3)}
    assert new.layout.held(1) - state.layout.held(1) == {key(1, 2, 3)}
    fixed = {k for k in state.layout.held(1) if 1 in k.owners}
    assert all(new.contents[(1, k)] == state.contents[(1, k)] for k in fixed)


def test_update_family_bc_keeps_new_assignees_share():
    units = random_units(5, 6)
    state = init_storage(build_layout_bc(5, 1, 3, Assignment.from_units((5, 1, 2, 3, 4))), units)
    a_next = Assignment.from_units((1, 2, 3, 4, 5))
    new = update_storage_bc(state, a_next, _truth_recovered(state, a_next, units))
    kept = {k for k in new.layout.held(2) if k.unit == 1}
    assert kept == {key(1, 1, 2, 3), key(1, 1, 2, 4), key(1, 1, 2, 5)}
    assert all(new.contents[(2, k)] == state.contents[(2, k)] for k in kept)
    assert new.layout.holdings == build_layout_bc(5, 1, 3, a_next).holdings


def test_update_requires_recovered_bits():
    units = random_units(3, 6)
    state = init_storage(build_layout_a(3, 1, 2, Assignment.from_units((3, 1, 2))), units)
    with pytest.raises(KeyError):
        update_storage(state, Assignment.from_units((1, 2, 3)), {})


def test_relabel():
    assert relabel(frozenset({1, 2}), 2, 1) == {1, 2}
    assert relabel(frozenset({2, 3}), 2, 1) == {1, 3}


@pytest.mark.parametrize(
    "scheme, param, K, q",
    [(Scheme.A, 2, 4, 1), (Scheme.A, 1, 3, 2), (Scheme.B, 3, 4, 2), (Scheme.B, 3, 5, 1), (Scheme.C, 2, 4, 2)],
)
def test_ten_epochs_stay_canonical(scheme, param, K, q):
    rng = random.Random(7)
    a = Assignment.identity(K, q)
    state, units = fresh_state(scheme, param, K, q, a)
    for _ in range(10):
        a_next = random_assignment(K, q, rng)
        _, _, state = shuffle_once(scheme, state, units, a_next)
        canonical = build_layout(state.kind, K, q, a_next)
        assert state.layout.holdings == canonical.holdings
        L = state.sub_bits
        for k in range(1, K + 1):
            assert state.held_bits(k) <= state.kind.storage_over_q(K) * q * state.B
            for held in state.layout.held(k):
                slot = state.slots[held.unit][held.owners]
                assert state.contents[(k, held)] == units[held.unit].slice(slot * L, L)
            for i in a_next.batch(k):
                assert state.reassemble(k, i) == units[i]


def test_dump_state_is_sorted_lines():
    state = init_storage(build_layout_a(3, 1, 2, Assignment.from_units((3, 1, 2))), random_units(3, 6))
    lines = dump_state(state)
    assert len(lines) == 21
    assert lines[0].split("\t")[:2] == ["1", "F1{1,2}"]
