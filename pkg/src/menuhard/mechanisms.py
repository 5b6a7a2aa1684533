"""Brute-force welfare maximizers, Clarke-pivot VCG, greedy, and truthfulness audits.

A mechanism here is any callable taking a list of valuations (one per bidder)
and returning an outcome object with ``bundle_for(i)`` and ``payments``.  All
ties are broken toward the smallest bit pattern (for allocations: the
lexicographically smallest tuple of part masks).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial
from typing import Callable, Sequence

from .core import Allocation, Bundle, Valuation, iter_masks, require_enumerable, submasks

MAX_BRUTE_FORCE_BIDDERS = 4
CPP_MODES = ("exact", "flexible")


@dataclass(frozen=True)
class AuctionOutcome:
    allocation: Allocation
    payments: tuple

    def bundle_for(self, i: int) -> int:
        return self.allocation.parts[i]


@dataclass(frozen=True)
class CppOutcome:
    bundle: int
    m: int
    payments: tuple
    mode: str = "exact"

    def bundle_for(self, i: int) -> int:
        return self.bundle


@dataclass(frozen=True)
class DistributionOutcome:
    """A lottery over size-k bundles with one price per bidder for the whole lottery."""

    distribution: tuple  # of (mask, Fraction probability)
    m: int
    k: int
    payments: tuple = ()

    def __post_init__(self):
        dist = tuple((int(S), Fraction(p)) for S, p in self.distribution)
        object.__setattr__(self, "distribution", dist)
        if sum(p for _, p in dist) != 1 or any(p < 0 for _, p in dist):
            raise ValueError("distribution probabilities must be non-negative and sum to 1")
        if any(S.bit_count() != self.k or S >> self.m for S, _ in dist):
            raise ValueError(f"every support bundle must have size k={self.k}")


Mechanism = Callable[[Sequence[Valuation]], object]


def _universe(valuations: Sequence[Valuation]) -> int:
    ms = {v.m for v in valuations}
    if len(ms) != 1:
        raise ValueError(f"valuations over different universes: {sorted(ms)}")
    return ms.pop()


def _scaled_tables(valuations: Sequence[Valuation]) -> tuple[list, int]:
    """Integer value tables sharing one denominator (exact)."""
    tables = [v.table() for v in valuations]
    denom = math.lcm(1, *(x.denominator for tab in tables for x in tab))
    return [[x.numerator * (denom // x.denominator) for x in tab] for tab in tables], denom


def _best_allocation(tables: list, m: int) -> tuple[int, tuple]:
    """Max-welfare assignment (items may stay unallocated), lexicographically smallest among optima."""
    n = len(tables)
    memo: dict = {}

    def search(i: int, remaining: int):
        if i == n:
            return 0, ()
        key = (i, remaining)
        if key in memo:
            return memo[key]
        tab = tables[i]
        best_w, best_parts = None, None
        for sub in submasks(remaining):
            w, rest = search(i + 1, remaining & ~sub)
            w += tab[sub]
            if best_w is None or w > best_w:
                best_w, best_parts = w, (sub,) + rest
        memo[key] = (best_w, best_parts)
        return best_w, best_parts

    return search(0, (1 << m) - 1)


def optimal_allocation(valuations: Sequence[Valuation]) -> tuple[Fraction, Allocation]:
    m = _universe(valuations)
    require_enumerable(m)
    if len(valuations) > MAX_BRUTE_FORCE_BIDDERS:
        raise ValueError(f"brute force supports at most {MAX_BRUTE_FORCE_BIDDERS} bidders")
    tables, denom = _scaled_tables(valuations)
    w, parts = _best_allocation(tables, m)
    return Fraction(w, denom), Allocation(parts, m)


def vcg_auction(valuations: Sequence[Valuation]) -> AuctionOutcome:
    """Welfare-optimal allocation with Clarke pivot payments."""
    m = _universe(valuations)
    require_enumerable(m)
    n = len(valuations)
    if n > MAX_BRUTE_FORCE_BIDDERS:
        raise ValueError(f"brute force supports at most {MAX_BRUTE_FORCE_BIDDERS} bidders")
    tables, denom = _scaled_tables(valuations)
    w, parts = _best_allocation(tables, m)
    payments = []
    for i in range(n):
        others = tables[:i] + tables[i + 1:]
        w_without, _ = _best_allocation(others, m) if others else (0, ())
        others_here = w - tables[i][parts[i]]
        payments.append(Fraction(w_without - others_here, denom))
    return AuctionOutcome(Allocation(parts, m), tuple(payments))


def greedy_auction(valuations: Sequence[Valuation]) -> Allocation:
    """Items in ascending order, each to the bidder with the largest positive marginal value."""
    m = _universe(valuations)
    parts = [0] * len(valuations)
    current = [Fraction(0)] * len(valuations)
    for j in range(m):
        bit = 1 << j
        best_i, best_gain, best_val = None, Fraction(0), None
        for i, v in enumerate(valuations):
            val = v.value(parts[i] | bit)
            gain = val - current[i]
            if gain > best_gain:
                best_i, best_gain, best_val = i, gain, val
        if best_i is not None:
            parts[best_i] |= bit
            current[best_i] = best_val
    return Allocation(tuple(parts), m)


def greedy_mechanism(valuations: Sequence[Valuation]) -> AuctionOutcome:
    """Greedy allocation with zero payments (not truthful in general)."""
    alloc = greedy_auction(valuations)
    return AuctionOutcome(alloc, (Fraction(0),) * alloc.n)


def first_price_greedy(valuations: Sequence[Valuation]) -> AuctionOutcome:
    """Greedy allocation where each bidder pays its reported value: deliberately manipulable."""
    alloc = greedy_auction(valuations)
    return AuctionOutcome(alloc, tuple(v.value(p) for v, p in zip(valuations, alloc.parts)))


def _check_mode(mode: str, k: int, m: int) -> None:
    if mode not in CPP_MODES:
        raise ValueError(f"mode must be one of {CPP_MODES}, got {mode!r}")
    if not 0 <= k <= m:
        raise ValueError(f"k={k} outside [0, {m}]")


def _cpp_candidates(m: int, mode: str, k: int):
    if mode == "exact":
        return list(iter_masks(m, k))
    return sorted(S for size in range(k + 1) for S in iter_masks(m, size))


def _cpp_argmax(tables: list, candidates: list) -> tuple[int, int]:
    best_S, best_w = None, None
    for S in candidates:
        w = sum(tab[S] for tab in tables)
        if best_w is None or w > best_w:
            best_S, best_w = S, w
    return best_S, best_w


def cpp_bruteforce(valuations: Sequence[Valuation], mode: str, k: int) -> Bundle:
    """Bundle of size exactly k (exact) or at most k (flexible) maximizing total value."""
    m = _universe(valuations)
    require_enumerable(m)
    _check_mode(mode, k, m)
    tables, _ = _scaled_tables(valuations)
    S, _ = _cpp_argmax(tables, _cpp_candidates(m, mode, k))
    return Bundle(S, m)


def cpp_vcg(valuations: Sequence[Valuation], mode: str, k: int) -> CppOutcome:
    """Brute-force public project with Clarke pivot payments."""
    m = _universe(valuations)
    require_enumerable(m)
    _check_mode(mode, k, m)
    tables, denom = _scaled_tables(valuations)
    candidates = _cpp_candidates(m, mode, k)
    S, w = _cpp_argmax(tables, candidates)
    payments = []
    for i in range(len(tables)):
        others = tables[:i] + tables[i + 1:]
        _, w_without = _cpp_argmax(others, candidates)
        payments.append(Fraction(w_without - (w - tables[i][S]), denom))
    return CppOutcome(S, m, tuple(payments), mode)


MECHANISMS = {
    "vcg": vcg_auction,
    "greedy": greedy_mechanism,
    "first-price-greedy": first_price_greedy,
}


def make_mechanism(name: str, k: int | None = None) -> Mechanism:
    if name in MECHANISMS:
        return MECHANISMS[name]
    if name in ("cpp-exact", "cpp-flex"):
        if k is None:
            raise ValueError(f"mechanism {name} needs k")
        return partial(cpp_vcg, mode="exact" if name == "cpp-exact" else "flexible", k=k)
    raise ValueError(f"unknown mechanism {name!r}")


def with_player(opponents: Sequence[Valuation], i: int, v: Valuation) -> list:
    """Profile with ``v`` inserted as bidder ``i``."""
    profile = list(opponents)
    profile.insert(i, v)
    return profile


@dataclass(frozen=True)
class Violation:
    true_index: int
    report_index: int
    truthful_utility: Fraction
    misreport_utility: Fraction

    @property
    def gain(self) -> Fraction:
        return self.misreport_utility - self.truthful_utility


@dataclass
class TruthfulnessReport:
    player: int
    family_size: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def truthfulness_audit(mech: Mechanism, family: Sequence[Valuation], i: int, opponents: Sequence[Valuation]) -> TruthfulnessReport:
    """Compare truthful utility against every misreport drawn from ``family``."""
    outcomes = [mech(with_player(opponents, i, v)) for v in family]
    bundles = [o.bundle_for(i) for o in outcomes]
    prices = [Fraction(o.payments[i]) for o in outcomes]
    violations = []
    for a, v in enumerate(family):
        honest = v.value(bundles[a]) - prices[a]
        for b in range(len(family)):
            if b == a:
                continue
            lie = v.value(bundles[b]) - prices[b]
            if lie > honest:
                violations.append(Violation(a, b, honest, lie))
    return TruthfulnessReport(i, len(family), violations)
