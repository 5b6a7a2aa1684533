from fractions import Fraction
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from menuhard.prob import (
    ExpBound,
    OutOfHypothesis,
    audit_claim,
    chernoff_bound,
    crossover,
    exact_binomial_tail,
    exact_hypergeometric_tail,
    mc_binomial_tail,
    mc_intersection_tail,
    three_sigma,
)


def comb(n, k):
    return factorial(n) // (factorial(k) * factorial(n - k)) if 0 <= k <= n else 0


def pmf_oracle(n, p, k):
    return comb(n, k) * p ** k * (1 - p) ** (n - k)


def test_exp_bound_encloses_value():
    b = ExpBound.exp_neg(50)
    assert b.lo <= b.hi and b.hi - b.lo < Fraction(1, 10 ** 60)
    assert abs(float(b) - 1.9287498479639178e-22) < 1e-35


def test_chernoff_direct_substitution():
    b = chernoff_bound(Fraction(1, 2), 100, 1)
    assert b.lo <= ExpBound.exp_neg(50).hi and ExpBound.exp_neg(50).lo <= b.hi
    assert chernoff_bound(Fraction(1, 3), 50, 0).compare(1) is True
    assert chernoff_bound(Fraction(1, 3), 50, 0).lo <= 1 <= chernoff_bound(Fraction(1, 3), 50, 0).hi


def test_chernoff_quarter_example_holds():
    # The exact tail Pr[X > 150], X ~ Bin(400, 1/4), against exp(-25).
    tail = exact_binomial_tail(400, Fraction(1, 4), 150, ">")
    assert chernoff_bound(Fraction(1, 4), 400, Fraction(1, 2)).compare(tail) is True


def test_chernoff_quarter_exact_tail_value():
    tail = exact_binomial_tail(400, Fraction(1, 4), 150, ">")
    assert tail == sum(pmf_oracle(400, Fraction(1, 4), k) for k in range(151, 401))
    assert 1.18e-8 < float(tail) < 1.19e-8
    # the standard exp(-mu eps^2 / 3) form does cover it
    assert ExpBound.exp_neg(Fraction(100, 12)).compare(tail) is True


def test_chernoff_hypothesis_guard():
    with pytest.raises(OutOfHypothesis):
        chernoff_bound(Fraction(1, 2), 10, Fraction(3, 2))
    chernoff_bound(Fraction(1, 2), 10, Fraction(3, 2), strict=False)


def test_binomial_examples():
    assert exact_binomial_tail(4, Fraction(1, 4), 2, ">=") == Fraction(67, 256)
    assert exact_binomial_tail(5, Fraction(1, 3), 6, ">") == 0
    assert exact_binomial_tail(5, 0, 1, ">=") == 0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 40), st.fractions(min_value=0, max_value=1, max_denominator=20), st.integers(-2, 42),
       st.sampled_from([">", ">=", "<", "<="]))
def test_binomial_matches_pmf_oracle(n, p, thr, direction):
    ops = {">": lambda k: k > thr, ">=": lambda k: k >= thr, "<": lambda k: k < thr, "<=": lambda k: k <= thr}
    expected = sum((pmf_oracle(n, p, k) for k in range(n + 1) if ops[direction](k)), Fraction(0))
    got = exact_binomial_tail(n, p, thr, direction)
    assert got == expected and 0 <= got <= 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.fractions(min_value=0, max_value=1, max_denominator=12), st.integers(0, 30))
def test_tail_complements(n, p, thr):
    assert exact_binomial_tail(n, p, thr, ">") + exact_binomial_tail(n, p, thr, "<=") == 1
    assert exact_binomial_tail(n, p, thr, ">=") + exact_binomial_tail(n, p, thr, "<") == 1


def test_hypergeometric_examples():
    h = exact_hypergeometric_tail(16, 4, 4, 2, ">")
    assert h == Fraction(comb(4, 3) * comb(12, 1) + comb(4, 4), comb(16, 4)) == Fraction(49, 1820)
    m, s, t = 12, 4, 5
    assert exact_hypergeometric_tail(m, s, t, 0, ">") == 1 - Fraction(comb(m - s, t), comb(m, t))
    assert exact_hypergeometric_tail(12, 3, 5, 3, ">") == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 14).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, m), st.integers(0, m), st.integers(-1, m))))
def test_hypergeometric_complements(args):
    m, s, t, thr = args
    assert exact_hypergeometric_tail(m, s, t, thr, ">") + exact_hypergeometric_tail(m, s, t, thr, "<=") == 1


def test_mc_within_three_sigma_in_most_runs():
    n, p, thr = 20, Fraction(3, 10), 8
    exact = float(exact_binomial_tail(n, p, thr, ">"))
    sig = three_sigma(exact, 10_000)
    inside = sum(abs(mc_binomial_tail(n, p, thr, ">", 10_000, seed) - exact) <= sig for seed in range(300))
    assert inside >= 0.99 * 300


def test_mc_intersection_agrees():
    exact = float(Fraction(49, 1820))
    est = mc_intersection_tail(16, 4, 4, 2, 200_000, seed=3)
    assert abs(est - exact) <= three_sigma(exact, 200_000)


def test_audit_small_value_fails_at_16():
    rep = audit_claim("small-value", 16, eps=Fraction(1, 4))
    assert rep.probability == Fraction(67, 256)
    assert rep.holds is False
    assert rep.csv_row()[-1] == "false"


def test_audit_covered_items_example():
    rep = audit_claim("covered-items", 300, n=3)
    q = Fraction(2, 3) ** 3
    assert rep.probability == exact_binomial_tail(300, q, Fraction(101, 100) * q * 300, ">")
    assert rep.bound.lo <= ExpBound.exp_neg(1).hi
    # past the crossover at m = 230 the exact probability exceeds exp(-1)
    assert rep.holds is False and float(rep.probability) > float(rep.bound)


def test_audit_mc_without_trials_is_incomplete():
    rep = audit_claim("opt-event", 16, method="mc", trials=0)
    assert rep.method == "incomplete" and rep.holds is None and rep.probability is None


def test_audit_mc_agrees_with_exact():
    exact = audit_claim("small-value", 16, eps=Fraction(1, 4))
    mc = audit_claim("small-value", 16, eps=Fraction(1, 4), method="mc", trials=100_000, seed=9)
    assert abs(mc.probability - float(exact.probability)) <= three_sigma(float(exact.probability), 100_000)


def test_audit_unknown_claim():
    with pytest.raises(ValueError):
        audit_claim("9.9", 16)


def test_crossover_reports_flip():
    reports, flip = crossover("covered-items", range(10, 1001, 10), n=3)
    assert len(reports) == 100
    assert flip == 230
    assert reports[0].holds is True and reports[-1].holds is False


def test_opt_event_holds_at_powers_of_four():
    for m in (16, 64, 256):
        assert audit_claim("opt-event", m).holds is True
