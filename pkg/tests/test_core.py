from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, strategies as st

from menuhard.core import (
    Allocation,
    Bundle,
    EnumerationRefused,
    InvalidAllocation,
    TableValuation,
    bundle_iter,
    counted,
    exact_sqrt,
    floor_power,
    iroot,
    iter_masks,
    require_enumerable,
    submasks,
    welfare,
)
from menuhard.valuations import AdditiveValuation, PolarAdditiveValuation


def choose(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k))


def test_bundle_iter_power_set_of_two():
    assert [b.members for b in bundle_iter(2)] == [frozenset(), {0}, {1}, {0, 1}]


def test_bundle_iter_size_filter_counts():
    assert len(list(bundle_iter(4, 2))) == 6
    assert sum(1 for _ in iter_masks(16, 4)) == choose(16, 4) == 1820


@pytest.mark.parametrize("m", range(0, 9))
def test_iter_masks_sizes_ascending(m):
    for k in range(m + 1):
        masks = list(iter_masks(m, k))
        assert masks == sorted(masks)
        assert len(masks) == choose(m, k)
        assert all(x.bit_count() == k for x in masks)


def test_bitstring_item_order():
    b = Bundle.from_bits("1010")
    assert b.members == {0, 2}
    assert b.bits() == "1010"


def test_submasks_ascending_and_complete():
    assert list(submasks(0b101)) == [0, 1, 4, 5]


@given(st.integers(1, 10).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, 2 ** m - 1), st.integers(0, 2 ** m - 1))))
def test_inclusion_exclusion(args):
    m, a, b = args
    S, T = Bundle(a, m), Bundle(b, m)
    assert S.intersection_size(T) + (S | T).size == S.size + T.size
    assert S.issubset(S | T)
    assert (S | T).is_strict_superset(S) == (S | T != S)
    assert (S & T).members == S.members & T.members


def test_bundle_rejects_out_of_range_items():
    with pytest.raises(ValueError):
        Bundle.of([4], 4)


def test_enumeration_cap_refuses(monkeypatch):
    monkeypatch.setenv("MENUHARD_ENUM_CAP", "5")
    with pytest.raises(EnumerationRefused):
        require_enumerable(6)
    require_enumerable(5)
    with pytest.raises(EnumerationRefused):
        PolarAdditiveValuation(0, 6).table()


def test_counter_contract():
    v = AdditiveValuation([1, 2, 3])
    c = counted(v)
    assert c.count == 0
    for S in (1, 2, 4):
        c.value(S)
    assert c.count == 3 and len(c.log) == 3
    c.reset()
    c.value(3)
    c.value(3)
    assert c.count == 2
    assert all(ans == v.value(S) for S, ans in c.log)


@given(st.lists(st.fractions(min_value=0, max_value=100), min_size=1, max_size=6), st.data())
def test_counter_transparent(values, data):
    v = AdditiveValuation(values)
    S = data.draw(st.integers(0, 2 ** len(values) - 1))
    assert counted(v).value(S) == v.value(S)


def test_welfare_examples():
    m = 2
    v1 = AdditiveValuation.from_dict(m, {0: 3})
    v2 = AdditiveValuation.from_dict(m, {1: 5})
    assert welfare(Allocation.empty(2, m), [v1, v2]) == 0
    assert welfare(Allocation((0b01, 0b10), m), [v1, v2]) == 8
    assert welfare(Allocation((0b1111,), 4), [AdditiveValuation([1] * 4)]) == 4


def test_allocation_rejects_overlap():
    with pytest.raises(InvalidAllocation):
        Allocation((0b11, 0b10), 2)


def test_normalization_and_determinism():
    v = TableValuation(3, lambda S: Fraction(S.bit_count(), 7))
    assert v.value(0) == 0
    assert v.value(5) == v.value(5) == Fraction(2, 7)


@given(st.fractions(), st.fractions())
def test_exact_round_trip(a, b):
    assert (a + b) - b == a
    assert (a * b) / b == a if b else True


@given(st.integers(0, 10 ** 40), st.integers(1, 12))
def test_iroot_is_floor(x, n):
    r = iroot(x, n)
    assert r ** n <= x < (r + 1) ** n


def test_floor_power_and_sqrt():
    assert floor_power(16, Fraction(1, 4)) == 2
    assert floor_power(100, Fraction(1, 2)) == 10
    assert floor_power(99, Fraction(1, 2)) == 9
    assert exact_sqrt(400) == 20
    with pytest.raises(ValueError):
        exact_sqrt(15)


def test_small_denominators_are_exact():
    m = 6
    assert Fraction(1, m ** 3) - Fraction(1, m ** 5) > 0
    t = m * 2 ** m + 1
    assert t * 3 - Fraction(1, m ** 4) < 3 * t
