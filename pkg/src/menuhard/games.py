"""Query games: hidden-star identification, target/flat distinguishing, and the
lottery sampler that turns a good truthful-in-expectation mechanism into a
distinguisher.

Strategies are pure functions of the history of ``(mask, answer)`` pairs:
``strategy.next_move(history)`` returns :class:`Query` or :class:`Commit`.
"""
from __future__ import annotations

import random
from math import lcm
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .core import bits_of, exact_sqrt, floor_power, frac_str, iroot, mask_of_bits, require_enumerable
from .mechanisms import DistributionOutcome
from .menus import Menu, structure_violations
from .valuations import Check, FlatValuation, StarValuation, TargetValuation

TRANSCRIPT_SCHEMA = 1


class MalformedSubmenu(ValueError):
    pass


@dataclass(frozen=True)
class Query:
    bundle: int


@dataclass(frozen=True)
class Commit:
    choice: object  # a mask for identification, "target"/"flat" for distinguishing


class QueryStrategy(Protocol):
    def next_move(self, history: Sequence[tuple]) -> Query | Commit: ...


# -- hidden-star identification -----------------------------------------------

class IdentificationAdversary:
    """Answers value queries while keeping as many stars consistent as possible.

    Bundles outside the submenu get the star-independent value.  A queried
    member is declared "not the star" unless it is the last candidate left.
    """

    def __init__(self, m: int, k: int, submenu, t=None):
        self.reference = StarValuation(m, k, submenu, min(int(S) for S in submenu), t)
        self.m, self.k, self.t = m, k, self.reference.t
        self.candidates = set(self.reference.submenu)
        self.fixed_star: int | None = None

    def copy(self) -> "IdentificationAdversary":
        other = object.__new__(IdentificationAdversary)
        other.__dict__.update(self.__dict__)
        other.candidates = set(self.candidates)
        return other

    def answer(self, mask: int) -> Fraction:
        ref = self.reference
        if mask not in ref.submenu:
            return ref.public_value(mask)
        if mask == self.fixed_star:
            return ref.cap
        if mask in self.candidates and len(self.candidates) == 1:
            self.fixed_star = mask
            return ref.cap
        self.candidates.discard(mask)
        return ref.cap - ref.gap

    def settle(self, commit: int) -> int:
        """Final star after the strategy commits: avoid the committed bundle if possible."""
        if self.fixed_star is not None:
            return self.fixed_star
        others = sorted(c for c in self.candidates if c != commit)
        return others[0] if others else commit


@dataclass
class GameResult:
    m: int
    k: int
    t: Fraction
    submenu: tuple
    queries_used: int
    submenu_queries: int
    committed: int | None
    star: int
    success: bool
    forfeited: bool
    transcript: list = field(default_factory=list)  # (mask, answer)

    def to_json(self) -> dict:
        return {
            "schema": TRANSCRIPT_SCHEMA,
            "m": self.m,
            "k": self.k,
            "t": frac_str(self.t),
            "submenu": [bits_of(S, self.m) for S in self.submenu],
            "queries": [{"bundle": bits_of(S, self.m), "answer": frac_str(a)} for S, a in self.transcript],
            "commit": None if self.committed is None else bits_of(self.committed, self.m),
            "star": bits_of(self.star, self.m),
            "success": self.success,
            "forfeited": self.forfeited,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GameResult":
        if d.get("schema") != TRANSCRIPT_SCHEMA:
            raise ValueError(f"transcript schema {d.get('schema')} != {TRANSCRIPT_SCHEMA}")
        m = d["m"]
        submenu = tuple(mask_of_bits(b) for b in d["submenu"])
        transcript = [(mask_of_bits(q["bundle"]), Fraction(q["answer"])) for q in d["queries"]]
        return cls(
            m, d["k"], Fraction(d["t"]), submenu, len(transcript), sum(1 for S, _ in transcript if S in submenu),
            None if d["commit"] is None else mask_of_bits(d["commit"]), mask_of_bits(d["star"]),
            d["success"], d["forfeited"], transcript,
        )

    def replay_consistent(self) -> bool:
        """Every recorded answer equals the final star valuation's value."""
        v = StarValuation(self.m, self.k, self.submenu, self.star, self.t)
        return all(v.value(S) == a for S, a in self.transcript)


class ScanStrategy:
    """Query submenu members in a fixed order; commit once the star is known."""

    def __init__(self, order: Sequence[int], cap: Fraction):
        self.order = list(order)
        self.cap = Fraction(cap)

    def next_move(self, history):
        asked = {S for S, _ in history}
        for S, a in history:
            if a == self.cap and S in self.order:
                return Commit(S)
        left = [S for S in self.order if S not in asked]
        if len(left) <= 1:
            return Commit(left[0] if left else self.order[-1])
        return Query(left[0])


class GuessStrategy:
    """Query the first ``budget`` members of ``order``, then commit to the first unrefuted one."""

    def __init__(self, order: Sequence[int], budget: int, cap: Fraction):
        self.order = list(order)
        self.budget = budget
        self.cap = Fraction(cap)

    def next_move(self, history):
        for S, a in history:
            if a == self.cap:
                return Commit(S)
        if len(history) < self.budget:
            return Query(self.order[len(history)])
        asked = {S for S, _ in history}
        return Commit(next(S for S in self.order if S not in asked))


def identification_game(strategy: QueryStrategy, m: int, k: int, submenu, t=None, menu: Menu | None = None,
                        budget: int | None = None) -> GameResult:
    """Play ``strategy`` against the identification adversary.

    When ``menu`` is supplied, ``submenu`` must be structured inside it.
    Exceeding the move budget (default 2^m) forfeits.
    """
    submenu = tuple(sorted(int(S) for S in submenu))
    if menu is not None:
        problems = structure_violations(submenu, menu)
        if problems:
            raise MalformedSubmenu("; ".join(problems))
    adversary = IdentificationAdversary(m, k, submenu, t)
    budget = 2 ** m if budget is None else budget
    history: list = []
    members = set(submenu)
    for _ in range(budget):
        move = strategy.next_move(list(history))
        if isinstance(move, Commit):
            star = adversary.settle(int(move.choice))
            return GameResult(m, k, adversary.t, submenu, len(history), sum(1 for S, _ in history if S in members),
                              int(move.choice), star, int(move.choice) == star, False, history)
        history.append((move.bundle, adversary.answer(move.bundle)))
    star = adversary.settle(-1)
    return GameResult(m, k, adversary.t, submenu, len(history), sum(1 for S, _ in history if S in members),
                      None, star, False, True, history)


def decision_tree_depth(m: int, k: int, submenu, t=None) -> int:
    """Fewest value queries that identify the star with certainty, over all adaptive strategies.

    Searches every query bundle against the true star valuations (no adversary
    shortcut): the answer to a query partitions the candidate stars, and the
    depth is the minimax over those partitions.
    """
    require_enumerable(m)
    submenu = sorted(int(S) for S in submenu)
    base = StarValuation(m, k, submenu, submenu[0], t)
    tables = {S: base.with_star(S).table() for S in submenu}
    all_masks = range(1 << m)
    memo: dict = {}

    def depth(cands: frozenset) -> int:
        if len(cands) <= 1:
            return 0
        if cands in memo:
            return memo[cands]
        best = None
        for q in all_masks:
            classes: dict = {}
            for c in cands:
                classes.setdefault(tables[c][q], set()).add(c)
            if len(classes) < 2:
                continue
            worst = 1 + max(depth(frozenset(cl)) for cl in classes.values())
            if best is None or worst < best:
                best = worst
        memo[cands] = best
        return best

    return depth(frozenset(submenu))


def fewest_queries_against_adversary(m: int, k: int, submenu, t=None) -> int:
    """Breadth-first search over every query sequence played against the adversary.

    Returns the fewest queries after which a commit is guaranteed to succeed.
    Different sequences reaching the same candidate set are merged.
    """
    require_enumerable(m)
    start = IdentificationAdversary(m, k, submenu, t)
    frontier = deque([(start, 0)])
    seen = {frozenset(start.candidates)}
    while frontier:
        adv, used = frontier.popleft()
        if len(adv.candidates) == 1:
            return used
        for q in range(1 << m):
            nxt = adv.copy()
            nxt.answer(q)
            key = frozenset(nxt.candidates)
            if key not in seen:
                seen.add(key)
                frontier.append((nxt, used + 1))
    raise AssertionError("candidate set never shrinks to one")


def verify_profit_argmax(star: StarValuation, menu: Menu) -> Check:
    """Is the star the strict profit maximizer against these menu prices?

    Checks every other menu bundle at its price, and every bundle worth at most
    t*(k - 2^-m) at price zero.  Witness: ("menu" | "price-free", mask).
    """
    m, k, t = star.m, star.k, star.t
    if not t > m * 2 ** m:
        raise MalformedSubmenu(f"t={t} must exceed m*2^m={m * 2 ** m}")
    missing = [S for S in star.submenu if S not in menu.entries]
    if missing:
        raise MalformedSubmenu(f"submenu bundles missing from menu: {[bits_of(S, m) for S in missing]}")
    best = star.value(star.star) - menu.entries[star.star]
    for S, p in sorted(menu.entries.items()):
        if S != star.star and not star.value(S) - p < best:
            return Check(False, ("menu", S))
    ceiling = t * (k - Fraction(1, 2 ** m))
    for S in range(1 << m):
        v = star.value(S)
        if v <= ceiling and not v < best:
            return Check(False, ("price-free", S))
    return Check(True)


# -- target vs flat distinguishing ---------------------------------------------

class FixedQueryStrategy:
    """Ask a fixed list of bundles; answer "target" as soon as one deviates from the flat value."""

    def __init__(self, bundles: Sequence[int], flat: FlatValuation):
        self.bundles = list(bundles)
        self.flat = flat
        self._checked = 0  # history entries already compared; reset when a new game starts

    def next_move(self, history):
        if len(history) < self._checked:
            self._checked = 0
        for S, a in history[self._checked:]:
            if a != self.flat.value(S):
                self._checked = 0
                return Commit("target")
        self._checked = len(history)
        if len(history) < len(self.bundles):
            return Query(self.bundles[len(history)])
        return Commit("flat")


@dataclass
class DistinguishingResult:
    trials: int
    successes: int
    informative_trials: int  # trials facing the target where some query was informative
    queries: int

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0


def random_targets(m: int, size: int, trials: int, rng: np.random.Generator) -> list:
    rows = rng.random((trials, m)).argsort(axis=1)[:, :size]
    return [sum(1 << int(j) for j in row) for row in rows]


def distinguishing_game(strategy: QueryStrategy, m: int, eps, seed, trials: int, t=None,
                        budget: int | None = None) -> DistinguishingResult:
    """Per trial: uniform size-sqrt(m) target, fair coin for target vs flat oracle."""
    flat = FlatValuation(m, eps, t)
    r = flat.root
    rng = np.random.default_rng(seed)
    targets = random_targets(m, r, trials, rng)
    coins = rng.integers(0, 2, size=trials)
    budget = 2 ** m if budget is None else budget
    successes = informative = queries = 0
    for T, coin in zip(targets, coins):
        facing_target = bool(coin)
        oracle = TargetValuation(m, T, eps, t) if facing_target else flat
        history: list = []
        verdict = None
        for _ in range(budget):
            move = strategy.next_move(history)
            if isinstance(move, Commit):
                verdict = move.choice
                break
            history.append((move.bundle, oracle.value(move.bundle)))
        queries += len(history)
        if facing_target and any(oracle.informative(S) for S, _ in history):
            informative += 1
        if verdict == ("target" if facing_target else "flat"):
            successes += 1
    return DistinguishingResult(trials, successes, informative, queries)


# -- lottery mechanisms and the profit comparison ------------------------------

class TieGap(NamedTuple):
    lower: Fraction
    upper: Fraction

    @property
    def certified(self) -> bool:
        return self.lower > self.upper


def _root_upper(m: int, exponent: Fraction, digits: int = 40) -> tuple[Fraction, bool]:
    """Rational R >= m**exponent (exact when the power is rational)."""
    a, b = exponent.numerator, exponent.denominator
    x = m ** a
    r = iroot(x, b)
    if r ** b == x:
        return Fraction(r), True
    scale = 10 ** digits
    return Fraction(iroot(x * scale ** b, b) + 1, scale), False


def hit_lower_bound(m: int, eps) -> tuple[Fraction, bool]:
    """Rational lower bound on m^-(1/2 - eps), and whether it is exact."""
    R, exact = _root_upper(m, Fraction(1, 2) - Fraction(eps))
    return 1 / R, exact


def tie_profit_gap(m: int, eps, q, t=None) -> TieGap:
    """Expected profit of the lottery promised by the approximation guarantee
    (lower bound, priced at sqrt(m)) against a lottery hitting the target with
    probability q (upper bound, priced at zero).

    When m^(1/2 - eps) is irrational the lower bound uses a rational
    under-estimate of the hit probability, so it stays a valid lower bound.
    """
    r = exact_sqrt(m)
    eps, q = Fraction(eps), Fraction(q)
    if not 0 <= eps <= Fraction(1, 2):
        raise ValueError("eps must lie in [0, 1/2]")
    if not 0 <= q <= 1:
        raise ValueError("q must be a probability")
    t = Fraction(m ** 10 if t is None else t)
    full, flat = r * t, (r - Fraction(1, 2)) * t
    h, _ = hit_lower_bound(m, eps)
    lower = h * full + (1 - h) * flat - r
    upper = q * full + (1 - q) * flat
    return TieGap(lower, upper)


def synthetic_hit_mechanism(T: int, m: int, eps, hit_rate):
    """Lottery mechanism that returns the target with probability ``hit_rate``
    and otherwise a fixed bundle meeting it in at most m^eps items."""
    r = exact_sqrt(m)
    hit_rate = Fraction(hit_rate)
    threshold = floor_power(m, eps)
    outside = [j for j in range(m) if not T >> j & 1]
    inside = [j for j in range(m) if T >> j & 1]
    miss_items = (outside + inside[:threshold])[:r]
    miss = sum(1 << j for j in miss_items)
    if (miss & T).bit_count() > threshold or miss.bit_count() != r:
        raise ValueError("cannot build a non-hitting bundle for these parameters")

    def mech(valuations):
        dist = [(T, hit_rate)] if hit_rate == 1 else [(T, hit_rate), (miss, 1 - hit_rate)]
        return DistributionOutcome(tuple(dist), m, r, (Fraction(0),) * len(valuations))

    return mech


class TieSample(NamedTuple):
    found: int | None
    samples: int


def tie_sampler(dist_mech, T: int, m: int, eps, sample_budget: int, seed, chunk: int = 1 << 16) -> TieSample:
    """Sample the mechanism's lottery (reporting the target valuation) until a
    bundle meets the target in more than m^eps items.  Sampling is exact: the
    lottery's probabilities are turned into integer weights."""
    v = TargetValuation(m, T, eps)
    out = dist_mech([v])
    support = [S for S, _ in out.distribution]
    probs = [p for _, p in out.distribution]
    denom = lcm(*(p.denominator for p in probs))
    weights = [p.numerator * (denom // p.denominator) for p in probs]
    hits = np.array([v.informative(S) for S in support])
    if not hits.any():
        return TieSample(None, sample_budget)
    cum = np.cumsum(weights, dtype=object)
    if denom < 2 ** 62:
        rng = np.random.default_rng(seed)
        cum = np.array(cum, dtype=np.int64)
        drawn = 0
        while drawn < sample_budget:
            size = min(chunk, sample_budget - drawn)
            idx = np.searchsorted(cum, rng.integers(0, denom, size=size), side="right")
            hit = hits[idx]
            if hit.any():
                first = int(np.argmax(hit))
                return TieSample(support[idx[first]], drawn + first + 1)
            drawn += size
        return TieSample(None, sample_budget)
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(0, 2 ** 63))
    rnd = random.Random(seed)
    cum = list(cum)
    for i in range(sample_budget):
        u = rnd.randrange(denom)
        j = next(x for x, c in enumerate(cum) if u < c)
        if hits[j]:
            return TieSample(support[j], i + 1)
    return TieSample(None, sample_budget)
