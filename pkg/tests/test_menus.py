from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from menuhard.core import iter_masks
from menuhard.generators import derive_rng, random_submenu, structured_menu
from menuhard.mechanisms import cpp_vcg, first_price_greedy, truthfulness_audit, vcg_auction
from menuhard.menus import (
    Menu,
    TaxationViolation,
    check_polar_menu,
    extract_menu,
    find_structured_submenu,
    is_structured,
    price_bins,
    structure_violations,
)
from menuhard.valuations import AdditiveValuation, ZeroValuation, all_polar, random_polar


def rich_family(m):
    """Polar valuations plus one high-value additive valuation per bundle, so every bundle is reachable."""
    return all_polar(m) + [AdditiveValuation([10 if S >> j & 1 else 0 for j in range(m)]) for S in range(2 ** m)]


def test_vcg_menu_additive_opponent():
    opp = [AdditiveValuation.from_dict(2, {0: 3, 1: 5})]
    polar_menu = extract_menu(vcg_auction, 0, opp)
    assert polar_menu.entries == {0: 0}
    menu = extract_menu(vcg_auction, 0, opp, rich_family(2))
    assert menu.entries == {0: 0, 0b01: 3, 0b10: 5, 0b11: 8}
    # opponent is not polar, so the price cap m = 2 does not apply
    assert not check_polar_menu(menu).ok


def test_zero_opponents_price_everything_at_zero():
    menu = extract_menu(vcg_auction, 0, [ZeroValuation(3)], rich_family(3))
    assert len(menu) == 8 and set(menu.entries.values()) == {0}
    cpp = extract_menu(lambda vals: cpp_vcg(vals, "exact", 2), 0, [ZeroValuation(4)])
    assert set(cpp.entries.values()) == {0}
    assert all(S.bit_count() == 2 for S in cpp.entries)


def test_non_truthful_mechanism_raises():
    with pytest.raises(TaxationViolation):
        extract_menu(first_price_greedy, 0, [ZeroValuation(3)])


def test_family_monotone():
    m = 3
    opp = [random_polar(m, Fraction(1, 2), 4)]
    fam = rich_family(m)
    prev = {}
    for size in (1, 4, 8, 12, len(fam)):
        menu = extract_menu(vcg_auction, 0, opp, fam[:size]).entries
        assert all(menu[S] == p for S, p in prev.items())
        prev = menu


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("n", [2, 3])
def test_polar_opponents_menu_properties(m, n):
    for seed in range(3):
        opp = [random_polar(m, Fraction(1, 2), derive_rng(seed, j)) for j in range(n - 1)]
        menu = extract_menu(vcg_auction, 0, opp)
        assert check_polar_menu(menu).ok
        assert len(menu) <= 2 ** m
        assert truthfulness_audit(vcg_auction, all_polar(m), 0, opp).ok


def test_check_polar_menu_edge_cases():
    assert check_polar_menu(Menu(0, 3, {0: Fraction(0)})).ok
    m = 3
    assert check_polar_menu(Menu(0, m, {0b001: Fraction(1), 0b011: 1 + Fraction(1, m ** 3)})).ok
    bad = check_polar_menu(Menu(0, m, {0b001: Fraction(1), 0b011: 1 + Fraction(1, m ** 3) - Fraction(1, 10 ** 9)}))
    assert bad.gap_violations and not bad.price_cap_violations


def test_single_bin_dominates():
    m = 4
    members = [0b0011, 0b1100, 0b0101, 0b1010]
    entries = {S: Fraction(1) for S in members}
    entries.update({0: Fraction(0), 0b0001: Fraction(1, 2), 0b0010: Fraction(1, 2), 0b1111: Fraction(3)})
    menu = Menu(0, m, entries)
    assert len(menu) == 8
    sub = find_structured_submenu(menu)
    assert sub is not None and sub.bundles == frozenset(members)
    assert sub.common_size == 2 and sub.price_band == (1, 1)


def test_distinct_sizes_give_singleton():
    m = 4
    menu = Menu(0, m, {0: Fraction(0), 0b0001: Fraction(1), 0b0011: Fraction(2), 0b0111: Fraction(3), 0b1111: Fraction(4)})
    sub = find_structured_submenu(menu)
    assert sub is not None and len(sub) == 1


def test_gap_violation_rejects_bin():
    m = 3
    menu = Menu(0, m, {0b001: Fraction(1), 0b010: Fraction(1), 0b011: Fraction(1)})
    assert find_structured_submenu(menu) is None
    assert structure_violations([0b001, 0b010], menu)


def test_structure_conditions_individually():
    m = 3
    band = Fraction(1, m ** 5)
    base = {0b011: Fraction(1), 0b101: 1 + band}
    assert is_structured([0b011, 0b101], Menu(0, m, base))
    assert not is_structured([0b011, 0b101], Menu(0, m, {0b011: Fraction(1), 0b101: 1 + 2 * band}))
    assert not is_structured([0b011, 0b100], Menu(0, m, {0b011: Fraction(1), 0b100: Fraction(1)}))
    assert not is_structured([0b011], Menu(0, m, {0b011: Fraction(4)}))


def test_bins_keyed_by_size_and_price():
    m = 3
    menu = Menu(0, m, {0b001: Fraction(1), 0b010: 1 + Fraction(1, 2 * m ** 5), 0b011: Fraction(2)})
    bins = price_bins(menu)
    assert bins == {(1, m ** 5): [0b001, 0b010], (2, 2 * m ** 5): [0b011]}
    assert len(bins) <= (m + 1) * (m ** 6 + 1)


@settings(max_examples=80, deadline=None)
@given(st.integers(4, 7), st.integers(0, 10 ** 6), st.booleans())
def test_generated_submenus_are_found_and_structured(m, seed, edge):
    rng = derive_rng(seed)
    k = int(rng.integers(1, m))
    size = int(rng.integers(1, min(5, len(list(iter_masks(m, k)))) + 1))
    sub = random_submenu(m, k, size, rng)
    menu = structured_menu(m, sub, rng, edge=edge)
    assert is_structured(sub, menu)
    found = find_structured_submenu(menu)
    if found is not None:
        assert is_structured(found.bundles, menu)


def test_menu_json_and_csv_round_trip():
    menu = extract_menu(vcg_auction, 0, [random_polar(3, Fraction(1, 2), 1)])
    assert Menu.from_json(menu.to_json()) == menu
    lines = menu.to_csv().splitlines()
    assert lines[0] == "bundle,size,price" and len(lines) == len(menu) + 1


def test_menu_extraction_reproducible():
    def stats(seed):
        opp = [random_polar(4, Fraction(1, 2), derive_rng(seed, 0))]
        menu = extract_menu(vcg_auction, 0, opp)
        sub = find_structured_submenu(menu)
        return len(menu), None if sub is None else len(sub), menu.to_json()

    assert [stats(s) for s in range(5)] == [stats(s) for s in range(5)]
