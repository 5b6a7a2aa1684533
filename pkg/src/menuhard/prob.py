"""Exact tails, interval-certified exponential bounds and Monte Carlo cross-checks.

Probabilities that come from binomial or hypergeometric counts are summed
exactly as fractions.  Exponential bounds exp(-x) are carried as rational
intervals from mpmath's interval arithmetic, so "exact <= bound" is decided by
containment rather than by floating-point comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np
from mpmath import iv

from .core import exact_sqrt

DEFAULT_PRECISION = 50
DIRECTIONS = (">", ">=", "<", "<=")


class OutOfHypothesis(ValueError):
    """The deviation parameter lies outside [0, 1], where the stated bound is not claimed."""


def _mpi_to_fraction(t) -> Fraction:
    sign, man, exp, _ = t
    if not man and exp:
        raise OverflowError("non-finite interval endpoint")
    x = Fraction(int(man)) * (Fraction(2) ** exp)
    return -x if sign else x


def _iv_rational(x: Fraction):
    x = Fraction(x)
    return iv.mpf(x.numerator) / x.denominator


@dataclass(frozen=True)
class ExpBound:
    """The real number exp(-x), enclosed in the rational interval [lo, hi]."""

    label: str
    lo: Fraction
    hi: Fraction
    digits: int

    @classmethod
    def from_interval(cls, label: str, x_interval, digits: int = DEFAULT_PRECISION) -> "ExpBound":
        old = iv.dps
        iv.dps = digits + 10
        try:
            y = iv.exp(-x_interval)
            a, b = y._mpi_
        finally:
            iv.dps = old
        return cls(label, _mpi_to_fraction(a), _mpi_to_fraction(b), digits)

    @classmethod
    def exp_neg(cls, x, digits: int = DEFAULT_PRECISION, label: str | None = None) -> "ExpBound":
        """exp(-x) for rational x."""
        x = Fraction(x)
        old = iv.dps
        iv.dps = digits + 10
        try:
            xi = _iv_rational(x)
        finally:
            iv.dps = old
        return cls.from_interval(label or f"exp(-{x})", xi, digits)

    @classmethod
    def exp_neg_power(cls, base: int, power, digits: int = DEFAULT_PRECISION) -> "ExpBound":
        """exp(-(base ** power)) for rational power."""
        power = Fraction(power)
        old = iv.dps
        iv.dps = digits + 10
        try:
            xi = iv.mpf(base) ** _iv_rational(power)
        finally:
            iv.dps = old
        return cls.from_interval(f"exp(-{base}^({power}))", xi, digits)

    def compare(self, prob) -> bool | None:
        """True if prob <= bound for certain, False if prob > bound, None if the enclosure is too wide."""
        prob = Fraction(prob)
        if prob <= self.lo:
            return True
        if prob > self.hi:
            return False
        return None

    def __float__(self) -> float:
        return float((self.lo + self.hi) / 2)

    def decimal(self) -> str:
        return format(float(self), ".6g")


def chernoff_bound(p, m: int, eps, direction: str = "upper", *, digits: int = DEFAULT_PRECISION, strict: bool = True) -> ExpBound:
    """exp(-p*m*eps^2), the stated bound on either deviation tail of a sum of m Bernoulli(p).

    With ``strict`` (default) an ``eps`` outside [0, 1] raises :class:`OutOfHypothesis`.
    """
    p, eps = Fraction(p), Fraction(eps)
    if direction not in ("upper", "lower"):
        raise ValueError("direction must be 'upper' or 'lower'")
    if not 0 < p < 1:
        raise ValueError(f"p={p} must lie strictly between 0 and 1")
    if strict and not 0 <= eps <= 1:
        raise OutOfHypothesis(f"eps={eps} outside [0, 1]")
    return ExpBound.exp_neg(p * m * eps * eps, digits)


def _selector(threshold, direction: str):
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    threshold = Fraction(threshold)
    return {
        ">": lambda k: k > threshold,
        ">=": lambda k: k >= threshold,
        "<": lambda k: k < threshold,
        "<=": lambda k: k <= threshold,
    }[direction]


def exact_binomial_tail(n: int, p, threshold, direction: str = ">") -> Fraction:
    """Pr[X <direction> threshold] for X ~ Binomial(n, p), summed exactly."""
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} is not a probability")
    keep = _selector(threshold, direction)
    a, b = p.numerator, p.denominator
    total = 0
    for k in range(n + 1):
        if keep(k):
            total += math.comb(n, k) * a ** k * (b - a) ** (n - k)
    return Fraction(total, b ** n)


def binomial_pmf(n: int, p) -> list:
    p = Fraction(p)
    a, b = p.numerator, p.denominator
    return [Fraction(math.comb(n, k) * a ** k * (b - a) ** (n - k), b ** n) for k in range(n + 1)]


def exact_hypergeometric_tail(m: int, s: int, t: int, threshold, direction: str = ">") -> Fraction:
    """Pr[|S & T| <direction> threshold] for fixed |S| = s and T uniform among size-t subsets of m items."""
    if not (0 <= s <= m and 0 <= t <= m):
        raise ValueError("set sizes must lie in [0, m]")
    keep = _selector(threshold, direction)
    total = 0
    for x in range(max(0, s + t - m), min(s, t) + 1):
        if keep(x):
            total += math.comb(s, x) * math.comb(m - s, t - x)
    return Fraction(total, math.comb(m, t))


def three_sigma(p: float, trials: int) -> float:
    return 3 * math.sqrt(max(p * (1 - p), 0.0) / trials)


def mc_intersection_tail(m: int, s: int, t: int, threshold: int, trials: int, seed, chunk: int = 100_000) -> float:
    """Simulated Pr[|S & T| > threshold] with S = {0..s-1} and T drawn by shuffling."""
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        T = rng.random((size, m)).argsort(axis=1)[:, :t]
        hits += int(((T < s).sum(axis=1) > threshold).sum())
        done += size
    return hits / trials


def mc_binomial_tail(n: int, p, threshold, direction: str, trials: int, seed) -> float:
    keep = _selector(threshold, direction)
    rng = np.random.default_rng(seed)
    draws = rng.binomial(n, float(Fraction(p)), size=trials)
    values, counts = np.unique(draws, return_counts=True)
    return sum(int(c) for v, c in zip(values, counts) if keep(int(v))) / trials


# -- auditing the probabilistic claims of the existence arguments --------------

CLAIMS = ("covered-items", "demand-concentration", "small-value", "opt-event")
CLAIM_ALIASES = {"3.7": "covered-items", "3.8": "demand-concentration", "4.4": "small-value", "O-event": "opt-event"}


@dataclass(frozen=True)
class ClaimReport:
    claim_id: str
    m: int
    n: int | None
    epsilon: Fraction | None
    method: str  # "exact", "mc" or "incomplete"
    probability: Fraction | float | None
    bound: ExpBound
    holds: bool | None
    in_hypothesis: bool
    note: str = ""

    def csv_row(self) -> list:
        prob = "" if self.probability is None else (
            f"{self.probability.numerator}/{self.probability.denominator}" if isinstance(self.probability, Fraction)
            else repr(self.probability)
        )
        return [
            self.claim_id,
            self.m,
            "" if self.n is None else self.n,
            "" if self.epsilon is None else str(self.epsilon),
            self.method,
            prob,
            self.bound.decimal(),
            "" if self.holds is None else str(self.holds).lower(),
        ]


CLAIM_CSV_HEADER = ["claim_id", "m", "n", "epsilon", "exact_or_mc", "probability", "bound", "holds"]


def _covered_items(m, n, eps, size):
    """Items demanded by no bidder exceed 1.01 times their expectation."""
    p = Fraction(1, n)
    q = (1 - p) ** n
    cut = Fraction(101, 100) * q * m
    bound = ExpBound.exp_neg(Fraction(m, 300))

    def exact():
        return exact_binomial_tail(m, q, cut, ">")

    def simulate(rng, trials):
        demanded = rng.random((trials, n, m)) < float(p)
        undemanded = (~demanded.any(axis=1)).sum(axis=1)
        return np.count_nonzero(undemanded > float(cut))

    return exact, simulate, bound, True, f"undemanded ~ Bin({m}, {q}), event > {cut}"


def _demand_concentration(m, n, eps, size):
    """A random polar valuation puts more than 2p|S| + 1/m^2 on a fixed bundle."""
    p = Fraction(1, n)
    s = m if size is None else size
    if not s > p * m / n:
        raise ValueError(f"bundle size {s} must exceed p*m/n = {p * m / n}")
    cut = 2 * p * s + Fraction(1, m ** 2)
    low = Fraction(1, m ** 3)
    bound = ExpBound.exp_neg(p * s)

    def event(d):
        return d + (s - d) * low > cut

    def exact():
        pmf = binomial_pmf(s, p)
        return sum((pmf[d] for d in range(s + 1) if event(d)), Fraction(0))

    def simulate(rng, trials):
        d = rng.binomial(s, float(p), size=trials)
        return sum(1 for x in d if event(int(x)))

    return exact, simulate, bound, True, f"bundle size {s}, event v(S) > {cut}"


def _small_value(m, n, eps, size):
    """A random polar valuation (p = 1/sqrt(m)) reaches m^eps on a size-sqrt(m) bundle."""
    r = exact_sqrt(m)
    p = Fraction(1, r)
    eps = Fraction(eps)
    low = Fraction(1, m ** 3)
    bound = ExpBound.exp_neg_power(m, 2 * eps)

    def event(d):
        v = d + (r - d) * low
        return v ** eps.denominator >= Fraction(m) ** eps.numerator

    def exact():
        pmf = binomial_pmf(r, p)
        return sum((pmf[d] for d in range(r + 1) if event(d)), Fraction(0))

    def simulate(rng, trials):
        d = rng.binomial(r, float(p), size=trials)
        return sum(1 for x in d if event(int(x)))

    deviation_ok = Fraction(m) ** eps.numerator <= 2 ** eps.denominator
    return exact, simulate, bound, deviation_ok, f"X ~ Bin({r}, 1/{r}), event v(S) >= {m}^{eps}"


def _opt_event(m, n, eps, size):
    """The best size-sqrt(m) bundle is worth less than sqrt(m)/2."""
    r = exact_sqrt(m)
    p = Fraction(1, r)
    low = Fraction(1, m ** 3)
    bound = ExpBound.exp_neg_power(m, Fraction(1, 4))

    def event(d):
        top = min(d, r)
        return top + (r - top) * low < Fraction(r, 2)

    def exact():
        pmf = binomial_pmf(m, p)
        return sum((pmf[d] for d in range(m + 1) if event(d)), Fraction(0))

    def simulate(rng, trials):
        d = rng.binomial(m, float(p), size=trials)
        return sum(1 for x in d if event(int(x)))

    return exact, simulate, bound, True, f"demanded ~ Bin({m}, 1/{r}), event best < {r}/2"


_CLAIM_BUILDERS = {
    "covered-items": _covered_items,
    "demand-concentration": _demand_concentration,
    "small-value": _small_value,
    "opt-event": _opt_event,
}


def canonical_claim(claim_id: str) -> str:
    claim_id = CLAIM_ALIASES.get(claim_id, claim_id)
    if claim_id not in _CLAIM_BUILDERS:
        raise ValueError(f"unknown claim {claim_id!r}; choose from {CLAIMS} or {tuple(CLAIM_ALIASES)}")
    return claim_id


def audit_claim(claim_id: str, m: int, n: int | None = None, eps=None, trials: int = 0, seed=None,
                method: str = "auto", size: int | None = None) -> ClaimReport:
    """Event probability at finite parameters against the asymptotic bound.

    ``method="auto"`` and ``"exact"`` sum the closed form; ``"mc"`` simulates
    ``trials`` draws (zero trials gives an incomplete report).  A bound that
    fails is a finding reported in ``holds``, never an exception.
    """
    claim = canonical_claim(claim_id)
    if claim in ("covered-items", "demand-concentration") and not n:
        raise ValueError(f"{claim} needs the number of bidders n")
    if claim == "small-value" and eps is None:
        raise ValueError("small-value needs eps")
    eps_f = None if eps is None else Fraction(eps)
    exact, simulate, bound, in_hyp, note = _CLAIM_BUILDERS[claim](m, n, eps_f, size)
    if method in ("auto", "exact"):
        prob = exact()
        return ClaimReport(claim, m, n, eps_f, "exact", prob, bound, bound.compare(prob), in_hyp, note)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    if trials <= 0:
        return ClaimReport(claim, m, n, eps_f, "incomplete", None, bound, None, in_hyp, note + "; no trials run")
    rng = np.random.default_rng(seed)
    hits = int(simulate(rng, trials))
    prob = hits / trials
    return ClaimReport(claim, m, n, eps_f, "mc", prob, bound, float(prob) <= float(bound), in_hyp, note)


def crossover(claim_id: str, ms: Iterable[int], **kwargs) -> tuple[list, int | None]:
    """Audit over increasing m; also return the first m where ``holds`` differs from the smallest m's verdict."""
    reports = [audit_claim(claim_id, m, **kwargs) for m in ms]
    flip = None
    for prev, cur in zip(reports, reports[1:]):
        if cur.holds != prev.holds:
            flip = cur.m
            break
    return reports, flip
