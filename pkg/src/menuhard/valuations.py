"""Valuation families used by the lower-bound constructions, plus exhaustive checkers."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np

from .core import (
    Bundle,
    Valuation,
    TableValuation,
    as_mask,
    bits_of,
    exact_sqrt,
    floor_power,
    frac_str,
    mask_of_bits,
    require_enumerable,
)


class InternalConsistencyError(AssertionError):
    """Two formulations that must agree did not: an implementation bug."""


class AdditiveValuation(Valuation):
    def __init__(self, item_values: Iterable):
        self.item_values = tuple(Fraction(x) for x in item_values)
        if any(x < 0 for x in self.item_values):
            raise ValueError("additive item values must be non-negative")
        self.m = len(self.item_values)

    @classmethod
    def from_dict(cls, m: int, values: dict) -> "AdditiveValuation":
        return cls(values.get(j, 0) for j in range(m))

    def _value(self, mask: int) -> Fraction:
        total = Fraction(0)
        j = 0
        while mask:
            if mask & 1:
                total += self.item_values[j]
            mask >>= 1
            j += 1
        return total

    def __repr__(self) -> str:
        return f"AdditiveValuation({[str(x) for x in self.item_values]})"


class PolarAdditiveValuation(Valuation):
    """Additive; demanded items are worth 1, every other item 1/m^3."""

    def __init__(self, demanded: Bundle | int, m: int):
        self.m = m
        self.demanded = as_mask(demanded)
        if self.demanded >> m:
            raise ValueError("demanded set outside universe")
        self.low = Fraction(1, m ** 3)

    def _value(self, mask: int) -> Fraction:
        high = (mask & self.demanded).bit_count()
        return high + (mask.bit_count() - high) * self.low

    @property
    def item_values(self) -> tuple:
        return tuple(Fraction(1) if self.demanded >> j & 1 else self.low for j in range(self.m))

    def __eq__(self, other) -> bool:
        return isinstance(other, PolarAdditiveValuation) and (self.m, self.demanded) == (other.m, other.demanded)

    def __hash__(self) -> int:
        return hash(("polar", self.m, self.demanded))

    def __repr__(self) -> str:
        return f"PolarAdditiveValuation(demanded={bits_of(self.demanded, self.m)})"


class ZeroValuation(Valuation):
    def __init__(self, m: int):
        self.m = m

    def _value(self, mask: int) -> Fraction:
        return Fraction(0)

    def __repr__(self) -> str:
        return f"ZeroValuation(m={self.m})"


def default_star_t(m: int) -> int:
    """Smallest integer strictly above m * 2^m."""
    return m * 2 ** m + 1


class StarValuation(Valuation):
    """Valuation that singles out one bundle ``star`` of a same-size submenu.

    Bundles below size k are worth t per item.  Submenu members other than the
    star lose 1/m^4 off the cap k*t; the star and anything strictly containing a
    member hit the cap.  Every other bundle of size >= k is worth
    t*(k - 2^-|S|), so marginals halve along chains and stay submodular.
    """

    def __init__(self, m: int, k: int, submenu: Iterable, star: Bundle | int, t=None, *, enforce_t_bound: bool = True):
        self.m = m
        self.k = k
        self.submenu = frozenset(as_mask(S) for S in submenu)
        self.star = as_mask(star)
        self.t = Fraction(default_star_t(m) if t is None else t)
        if not self.submenu:
            raise ValueError("submenu must be nonempty")
        if any(S >> m or S.bit_count() != k for S in self.submenu):
            raise ValueError(f"every submenu bundle must have size k={k}")
        if self.star not in self.submenu:
            raise ValueError("star must belong to the submenu")
        if enforce_t_bound and not self.t > m * 2 ** m:
            raise ValueError(f"t={self.t} must exceed m*2^m={m * 2 ** m}")
        self.cap = self.k * self.t
        self.gap = Fraction(1, m ** 4)
        self._members = sorted(self.submenu)

    def contains_member(self, mask: int) -> bool:
        return any(S & ~mask == 0 for S in self._members)

    def public_value(self, mask: int) -> Fraction:
        """Value of a bundle outside the submenu; identical for every choice of star."""
        s = mask.bit_count()
        if s < self.k:
            return s * self.t
        if s > self.k and self.contains_member(mask):
            return self.cap
        return self.t * (self.k - Fraction(1, 2 ** s))

    def _value(self, mask: int) -> Fraction:
        if mask in self.submenu:
            return self.cap if mask == self.star else self.cap - self.gap
        return self.public_value(mask)

    def with_star(self, star: Bundle | int) -> "StarValuation":
        return StarValuation(self.m, self.k, self.submenu, star, self.t, enforce_t_bound=False)

    def __repr__(self) -> str:
        return (
            f"StarValuation(m={self.m}, k={self.k}, star={bits_of(self.star, self.m)}, "
            f"|submenu|={len(self.submenu)}, t={self.t})"
        )


class FlatValuation(Valuation):
    """t per item up to sqrt(m) items; a size-sqrt(m) bundle is worth t*(sqrt(m) - 1/2)."""

    def __init__(self, m: int, eps=Fraction(1, 4), t=None):
        self.m = m
        self.root = exact_sqrt(m)
        self.eps = Fraction(eps)
        self.threshold = floor_power(m, self.eps)
        self.t = Fraction(m ** 10 if t is None else t)
        self.flat_top = self.t * (self.root - Fraction(1, 2))

    def _value(self, mask: int) -> Fraction:
        s = mask.bit_count()
        if s < self.root:
            return self.t * s
        if s > self.root:
            return self.t * self.root
        return self._top_value(mask)

    def _top_value(self, mask: int) -> Fraction:
        return self.flat_top

    def __repr__(self) -> str:
        return f"FlatValuation(m={self.m}, eps={self.eps})"


class TargetValuation(FlatValuation):
    """Like :class:`FlatValuation`, except size-sqrt(m) bundles meeting the hidden
    target in more than m^eps items reach the full t*sqrt(m)."""

    def __init__(self, m: int, target: Bundle | int, eps=Fraction(1, 4), t=None):
        super().__init__(m, eps, t)
        self.target = as_mask(target)
        if self.target >> m or self.target.bit_count() != self.root:
            raise ValueError(f"target must have exactly sqrt(m)={self.root} items")

    def informative(self, mask: int) -> bool:
        """True iff this bundle's value differs from the flat valuation's."""
        return mask.bit_count() == self.root and (mask & self.target).bit_count() > self.threshold

    def _top_value(self, mask: int) -> Fraction:
        if (mask & self.target).bit_count() > self.threshold:
            return self.t * self.root
        return self.flat_top

    def __repr__(self) -> str:
        return f"TargetValuation(m={self.m}, target={bits_of(self.target, self.m)}, eps={self.eps})"


def polar_value(v: PolarAdditiveValuation, S) -> Fraction:
    return v.value(S)


def star_value(v: StarValuation, S) -> Fraction:
    return v.value(S)


def target_value(v: FlatValuation, S) -> Fraction:
    return v.value(S)


def random_polar(m: int, p, seed=None) -> PolarAdditiveValuation:
    """Each item demanded independently with probability ``p``.

    ``seed`` may be an int, a SeedSequence or a numpy Generator.
    """
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"p={p} is not a probability")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    draws = rng.random(m) < float(p)
    demanded = 0
    for j in np.flatnonzero(draws):
        demanded |= 1 << int(j)
    return PolarAdditiveValuation(demanded, m)


def all_polar(m: int) -> list:
    """The full polar-additive family: one valuation per demanded set."""
    require_enumerable(m)
    return [PolarAdditiveValuation(d, m) for d in range(1 << m)]


# -- exhaustive structural checks ---------------------------------------------

class Check(NamedTuple):
    ok: bool
    witness: object = None

    def __bool__(self) -> bool:
        return self.ok


def _integer_table(v: Valuation) -> np.ndarray:
    """Exact value table scaled to integers by the common denominator."""
    table = v.table()
    denom = math.lcm(*(x.denominator for x in table))
    ints = [x.numerator * (denom // x.denominator) for x in table]
    if max(abs(x) for x in ints) < 2 ** 60:
        return np.array(ints, dtype=np.int64)
    return np.array(ints, dtype=object)


def is_monotone(v: Valuation) -> Check:
    """Check v(S + j) >= v(S) for every S and j outside S; witness is (S, j)."""
    require_enumerable(v.m)
    tab = _integer_table(v)
    masks = np.arange(1 << v.m)
    for j in range(v.m):
        bit = 1 << j
        without = masks[(masks & bit) == 0]
        bad = (tab[without | bit] < tab[without]).astype(bool)
        if bad.any():
            S = int(without[np.argmax(bad)])
            return Check(False, (Bundle(S, v.m), j))
    return Check(True)


def _marginal_violation(tab: np.ndarray, m: int):
    """First (S, T, j) with S subset of T, j outside T, and a larger marginal at T."""
    masks = np.arange(1 << m)
    for j in range(m):
        bit = 1 << j
        free = masks[(masks & bit) == 0]
        gain = tab[free | bit] - tab[free]
        for lo in range(0, len(free), 256):
            S = free[lo:lo + 256, None]
            subset = (S & ~free[None, :]) == 0
            bad = subset & (gain[lo:lo + 256, None] < gain[None, :]).astype(bool)
            if bad.any():
                r, c = np.unravel_index(np.argmax(bad), bad.shape)
                return int(free[lo + r]), int(free[c]), j
    return None


def _lattice_violation(tab: np.ndarray, m: int):
    """First (S, T) with v(S) + v(T) < v(S | T) + v(S & T)."""
    masks = np.arange(1 << m)
    for lo in range(0, len(masks), 256):
        S = masks[lo:lo + 256, None]
        T = masks[None, :]
        bad = (tab[S] + tab[T] < tab[S | T] + tab[S & T]).astype(bool)
        if bad.any():
            r, c = np.unravel_index(np.argmax(bad), bad.shape)
            return int(masks[lo + r]), int(masks[c])
    return None


def is_submodular(v: Valuation) -> Check:
    """Check decreasing marginals and the lattice inequality; both must agree.

    The witness is ``(S, T, j)`` from the marginal form.
    """
    require_enumerable(v.m)
    tab = _integer_table(v)
    marginal = _marginal_violation(tab, v.m)
    lattice = _lattice_violation(tab, v.m)
    if (marginal is None) != (lattice is None):
        raise InternalConsistencyError(
            f"submodularity forms disagree: marginal witness {marginal}, lattice witness {lattice}"
        )
    if marginal is None:
        return Check(True)
    S, T, j = marginal
    return Check(False, (Bundle(S, v.m), Bundle(T, v.m), j))


# -- canonical JSON ------------------------------------------------------------

def valuation_to_json(v: Valuation) -> dict:
    if isinstance(v, PolarAdditiveValuation):
        return {"kind": "polar", "m": v.m, "demanded": bits_of(v.demanded, v.m)}
    if isinstance(v, AdditiveValuation):
        return {"kind": "additive", "m": v.m, "item_values": [frac_str(x) for x in v.item_values]}
    if isinstance(v, ZeroValuation):
        return {"kind": "zero", "m": v.m}
    if isinstance(v, StarValuation):
        return {
            "kind": "star",
            "m": v.m,
            "k": v.k,
            "submenu": [bits_of(S, v.m) for S in sorted(v.submenu)],
            "star": bits_of(v.star, v.m),
            "t": frac_str(v.t),
        }
    if isinstance(v, TargetValuation):
        return {"kind": "target", "m": v.m, "target": bits_of(v.target, v.m), "eps": frac_str(v.eps), "t": frac_str(v.t)}
    if isinstance(v, FlatValuation):
        return {"kind": "flat", "m": v.m, "eps": frac_str(v.eps), "t": frac_str(v.t)}
    if isinstance(v, TableValuation):
        return {"kind": "table", "m": v.m, "values": [frac_str(x) for x in v.table()]}
    raise TypeError(f"no JSON form for {type(v).__name__}")


def valuation_from_json(d: dict) -> Valuation:
    kind, m = d["kind"], d["m"]
    if kind == "polar":
        return PolarAdditiveValuation(mask_of_bits(d["demanded"]), m)
    if kind == "additive":
        return AdditiveValuation(Fraction(x) for x in d["item_values"])
    if kind == "zero":
        return ZeroValuation(m)
    if kind == "star":
        return StarValuation(
            m, d["k"], [mask_of_bits(b) for b in d["submenu"]], mask_of_bits(d["star"]), Fraction(d["t"]),
            enforce_t_bound=False,
        )
    if kind == "target":
        return TargetValuation(m, mask_of_bits(d["target"]), Fraction(d["eps"]), Fraction(d["t"]))
    if kind == "flat":
        return FlatValuation(m, Fraction(d["eps"]), Fraction(d["t"]))
    if kind == "table":
        return TableValuation(m, [Fraction(x) for x in d["values"]])
    raise ValueError(f"unknown valuation kind {kind!r}")
