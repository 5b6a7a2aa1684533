"""Items, bundles, exact values, value oracles and query accounting.

Bundles are subsets of ``{0, ..., m-1}`` stored as integer bit masks (bit j set
iff item j is in the bundle).  Ascending mask order is the global tie-breaking
order used by every mechanism and search in the package.  All values are
:class:`fractions.Fraction` so strict inequalities are decided exactly.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence, Union

DEFAULT_ENUMERATION_CAP = 24
CAP_ENV_VAR = "MENUHARD_ENUM_CAP"

ExactValue = Fraction


class EnumerationRefused(ValueError):
    """Raised when an exhaustive procedure would exceed the enumeration cap."""

    def __init__(self, m: int, cap: int):
        super().__init__(f"refusing to enumerate 2^{m} bundles: m={m} exceeds enumeration cap {cap}")
        self.m = m
        self.cap = cap


class InvalidAllocation(ValueError):
    pass


def enumeration_cap() -> int:
    """Current cap on m for exhaustive procedures (env override: MENUHARD_ENUM_CAP)."""
    raw = os.environ.get(CAP_ENV_VAR)
    return int(raw) if raw else DEFAULT_ENUMERATION_CAP


def require_enumerable(m: int) -> None:
    cap = enumeration_cap()
    if m > cap:
        raise EnumerationRefused(m, cap)


@dataclass(frozen=True, order=True)
class Bundle:
    """An immutable subset of ``m`` items."""

    mask: int
    m: int = field(compare=False)

    def __post_init__(self):
        if self.m < 0 or self.mask < 0 or self.mask >> self.m:
            raise ValueError(f"mask {self.mask:#x} is not a subset of {self.m} items")

    @classmethod
    def of(cls, items: Iterable[int], m: int) -> "Bundle":
        mask = 0
        for j in items:
            if not 0 <= j < m:
                raise ValueError(f"item {j} outside universe of size {m}")
            mask |= 1 << j
        return cls(mask, m)

    @classmethod
    def empty(cls, m: int) -> "Bundle":
        return cls(0, m)

    @classmethod
    def full(cls, m: int) -> "Bundle":
        return cls((1 << m) - 1, m)

    @classmethod
    def from_bits(cls, bits: str) -> "Bundle":
        """Parse a bitstring where character j is item j (``"1010"`` is {0, 2})."""
        if any(c not in "01" for c in bits):
            raise ValueError(f"not a bitstring: {bits!r}")
        return cls(sum(1 << j for j, c in enumerate(bits) if c == "1"), len(bits))

    @property
    def members(self) -> frozenset:
        return frozenset(j for j in range(self.m) if self.mask >> j & 1)

    @property
    def size(self) -> int:
        return self.mask.bit_count()

    def __len__(self) -> int:
        return self.size

    def __contains__(self, j: int) -> bool:
        return 0 <= j < self.m and bool(self.mask >> j & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))

    def _check(self, other: "Bundle") -> None:
        if other.m != self.m:
            raise ValueError(f"bundles over different universes ({self.m} vs {other.m})")

    def __or__(self, other: "Bundle") -> "Bundle":
        self._check(other)
        return Bundle(self.mask | other.mask, self.m)

    def __and__(self, other: "Bundle") -> "Bundle":
        self._check(other)
        return Bundle(self.mask & other.mask, self.m)

    def __sub__(self, other: "Bundle") -> "Bundle":
        self._check(other)
        return Bundle(self.mask & ~other.mask, self.m)

    def issubset(self, other: "Bundle") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0

    def is_strict_superset(self, other: "Bundle") -> bool:
        self._check(other)
        return self.mask != other.mask and other.mask & ~self.mask == 0

    def intersection_size(self, other: "Bundle") -> int:
        self._check(other)
        return (self.mask & other.mask).bit_count()

    def bits(self) -> str:
        return "".join("1" if self.mask >> j & 1 else "0" for j in range(self.m))

    def __repr__(self) -> str:
        return f"Bundle({sorted(self.members)}, m={self.m})"


BundleLike = Union[Bundle, int]


def as_mask(S: BundleLike) -> int:
    return S.mask if isinstance(S, Bundle) else int(S)


def bits_of(mask: int, m: int) -> str:
    return "".join("1" if mask >> j & 1 else "0" for j in range(m))


def mask_of_bits(bits: str) -> int:
    return Bundle.from_bits(bits).mask


def iter_masks(m: int, size: int | None = None) -> Iterator[int]:
    """Masks of all subsets of m items in ascending order, optionally of one cardinality."""
    require_enumerable(m)
    if size is None:
        yield from range(1 << m)
        return
    if size < 0 or size > m:
        return
    if size == 0:
        yield 0
        return
    # Gosper's hack: next larger integer with the same popcount
    x = (1 << size) - 1
    limit = 1 << m
    while x < limit:
        yield x
        c = x & -x
        r = x + c
        x = (((r ^ x) >> 2) // c) | r


def bundle_iter(m: int, size_filter: int | None = None) -> Iterator[Bundle]:
    """Every subset of ``m`` items exactly once, in ascending bit-pattern order."""
    for mask in iter_masks(m, size_filter):
        yield Bundle(mask, m)


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask`` in ascending order."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


class Valuation:
    """A value oracle over ``m`` items.

    Subclasses implement :meth:`_value` on bit masks; callers may pass
    :class:`Bundle` or raw masks to :meth:`value`.
    """

    m: int

    def value(self, S: BundleLike) -> Fraction:
        mask = as_mask(S)
        if mask < 0 or mask >> self.m:
            raise ValueError(f"bundle {mask:#x} outside universe of size {self.m}")
        return self._value(mask)

    __call__ = value

    def _value(self, mask: int) -> Fraction:
        raise NotImplementedError

    def table(self) -> list:
        """Values of every bundle, indexed by mask."""
        require_enumerable(self.m)
        return [self._value(mask) for mask in range(1 << self.m)]


class TableValuation(Valuation):
    """Valuation given by an explicit table (or a callable on masks)."""

    def __init__(self, m: int, values: Union[Sequence, Callable[[int], object]]):
        self.m = m
        if callable(values):
            require_enumerable(m)
            values = [values(mask) for mask in range(1 << m)]
        if len(values) != 1 << m:
            raise ValueError(f"table has {len(values)} entries, expected {1 << m}")
        self._table = tuple(Fraction(v) for v in values)

    def _value(self, mask: int) -> Fraction:
        return self._table[mask]

    def table(self) -> list:
        return list(self._table)

    @classmethod
    def from_dict(cls, m: int, values: dict, default=0) -> "TableValuation":
        """Sparse construction: ``values`` maps Bundle/mask -> value; others get ``default``."""
        require_enumerable(m)
        table = [Fraction(default)] * (1 << m)
        for S, v in values.items():
            table[as_mask(S)] = Fraction(v)
        return cls(m, table)


class QueryCounter(Valuation):
    """Transparent wrapper counting every value query (duplicates included)."""

    def __init__(self, wrapped: Valuation):
        self.wrapped = wrapped
        self.m = wrapped.m
        self.log: list[tuple[int, Fraction]] = []  # (mask, answer)

    @property
    def count(self) -> int:
        return len(self.log)

    def _value(self, mask: int) -> Fraction:
        answer = self.wrapped._value(mask)
        self.log.append((mask, answer))
        return answer

    def logged_bundles(self) -> list[Bundle]:
        return [Bundle(mask, self.m) for mask, _ in self.log]

    def reset(self) -> None:
        self.log.clear()


def counted(oracle: Valuation) -> QueryCounter:
    return QueryCounter(oracle)


@dataclass(frozen=True)
class Allocation:
    """One bundle (mask) per bidder, pairwise disjoint."""

    parts: tuple
    m: int

    def __post_init__(self):
        parts = tuple(as_mask(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        seen = 0
        for i, p in enumerate(parts):
            if p < 0 or p >> self.m:
                raise InvalidAllocation(f"part {i} outside universe of size {self.m}")
            if p & seen:
                raise InvalidAllocation(f"part {i} overlaps an earlier part on items {bits_of(p & seen, self.m)}")
            seen |= p

    @property
    def n(self) -> int:
        return len(self.parts)

    def bundle(self, i: int) -> Bundle:
        return Bundle(self.parts[i], self.m)

    def bits(self) -> list[str]:
        return [bits_of(p, self.m) for p in self.parts]

    @classmethod
    def empty(cls, n: int, m: int) -> "Allocation":
        return cls((0,) * n, m)


def welfare(alloc: Allocation, valuations: Sequence[Valuation]) -> Fraction:
    """Sum of each bidder's value for its part."""
    if len(valuations) != alloc.n:
        raise InvalidAllocation(f"{len(valuations)} valuations for {alloc.n} parts")
    return sum((v.value(p) for v, p in zip(valuations, alloc.parts)), Fraction(0))


def iroot(x: int, n: int) -> int:
    """Largest integer r with r**n <= x (x >= 0, n >= 1)."""
    if x < 0 or n < 1:
        raise ValueError("iroot needs x >= 0 and n >= 1")
    if x < 2:
        return x
    r = 1 << ((x.bit_length() + n - 1) // n)  # r**n >= x
    while True:
        nxt = ((n - 1) * r + x // r ** (n - 1)) // n
        if nxt >= r:
            break
        r = nxt
    while r ** n > x:
        r -= 1
    while (r + 1) ** n <= x:
        r += 1
    return r


def floor_power(m: int, eps) -> int:
    """floor(m**eps) for a non-negative rational exponent, computed exactly."""
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("exponent must be non-negative")
    return iroot(m ** eps.numerator, eps.denominator)


def exact_sqrt(m: int) -> int:
    """Integer square root of a perfect square; anything else is rejected."""
    r = iroot(m, 2)
    if r * r != m:
        raise ValueError(f"m={m} is not a perfect square")
    return r


def frac_str(x) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s) -> Fraction:
    return Fraction(s)
