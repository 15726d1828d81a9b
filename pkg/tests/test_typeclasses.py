import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bcclab.errors import BudgetError, ValidationError
from bcclab.prob import Channel, product_extension
from bcclab.typeclasses import (TypeSpec, all_sequences, all_types, conditional_class_array,
                                conditional_type_bound_check, count_types, count_vshells,
                                decompose_over_vshells, enumerate_vshells, joint_counts,
                                multinomial, round_to_type, type_class, type_class_array,
                                type_of, uniform_type_bound_check)

type_counts = st.lists(st.integers(0, 4), min_size=1, max_size=3).filter(lambda c: sum(c) > 0)


def _brute_class(counts):
    k, n = len(counts), sum(counts)
    return sorted(s for s in itertools.product(range(k), repeat=n)
                  if tuple(s.count(a) for a in range(k)) == tuple(counts))


@given(type_counts)
def test_type_class_matches_brute_force(counts):
    t = TypeSpec(tuple(counts))
    arr = type_class_array(t)
    assert [tuple(r) for r in arr.tolist()] == _brute_class(counts)
    assert arr.shape[0] == t.class_size() == multinomial(counts)
    assert not arr.flags.writeable


def test_type_class_iterator_and_guard():
    t = TypeSpec((2, 1))
    assert list(type_class(t)) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    with pytest.raises(BudgetError):
        type_class_array(TypeSpec((20, 20)), guard=1000)


@pytest.mark.parametrize("n,k", [(1, 1), (3, 2), (4, 3), (6, 3), (5, 4)])
def test_type_count(n, k):
    assert count_types(n, k) == math.comb(n + k - 1, k - 1) == len(list(all_types(n, k)))


def test_type_of_and_joint_counts():
    assert type_of([0, 2, 2, 1]).counts == (1, 1, 2)
    assert type_of([0, 0], alphabet=3).counts == (2, 0, 0)
    with pytest.raises(ValidationError):
        type_of([0, 3], alphabet=2)
    np.testing.assert_array_equal(joint_counts([0, 0, 1], [1, 0, 1], 2, 2), [[1, 1], [0, 1]])


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6), st.integers(1, 20))
def test_round_to_type_properties(w, n):
    w = np.asarray(w)
    if w.sum() == 0:
        w = w + 1.0
    p = w / w.sum()
    c = round_to_type(p, n)
    assert c.sum() == n and np.all(c >= 0)
    assert np.all(np.abs(c - n * p) < 1.0 + 1e-9)


def test_round_to_type_tie_break():
    np.testing.assert_array_equal(round_to_type([0.5, 0.5], 3), [2, 1])
    np.testing.assert_array_equal(round_to_type([[0.25, 0.25], [0.25, 0.25]], 2), [[1, 1], [0, 0]])


def test_uniform_bound_small_case():
    rec = uniform_type_bound_check(TypeSpec((2, 2)))
    # 1/6 <= 25 * (1/2)^4, ratio 16/150
    assert rec.max_ratio == pytest.approx(16 / 150, rel=1e-12)
    assert rec.passed and rec.checked == 6


@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 5), st.data())
def test_conditional_class_against_filter(card_u, card_v, n, data):
    u = np.array(data.draw(st.lists(st.integers(0, card_u - 1), min_size=n, max_size=n)))
    v = np.array(data.draw(st.lists(st.integers(0, card_v - 1), min_size=n, max_size=n)))
    joint = joint_counts(u, v, card_u, card_v)
    got = {tuple(r) for r in conditional_class_array(u, joint).tolist()}
    want = {s for s in itertools.product(range(card_v), repeat=n)
            if np.array_equal(joint_counts(u, s, card_u, card_v), joint)}
    assert got == want


def test_conditional_bound_record_fields():
    rec = conditional_type_bound_check([[2, 1], [0, 3]])
    assert rec.passed
    assert rec.constant_exponent == 4 and rec.extra["printed_exponent"] == 8
    assert rec.extra["printed_ratio"] <= rec.max_ratio


def test_vshell_count():
    t = TypeSpec((2, 3))
    assert len(enumerate_vshells(t, 3)) == count_vshells(t, 3) == 6 * 10


@pytest.mark.parametrize("p,n,counts", [(0.2, 4, (2, 2)), (0.35, 3, (1, 2)), (0.1, 5, (5, 0))])
def test_vshell_reconstruction(p, n, counts):
    w = Channel.bsc(p)
    t = TypeSpec(counts)
    dec = decompose_over_vshells(w, t)
    assert dec.weights.sum() == pytest.approx(1.0, abs=1e-12)
    vs = type_class_array(t)
    zs = all_sequences(n, 2)
    wn = product_extension(w, n).rows
    v_idx = [int("".join(map(str, v)), 2) for v in vs.tolist()]
    np.testing.assert_allclose(dec.reconstruct(vs, zs), wn[v_idx], atol=1e-12, rtol=0)


def test_all_sequences_order():
    assert [tuple(s) for s in all_sequences(2, 3).tolist()] == list(itertools.product(range(3), repeat=2))
