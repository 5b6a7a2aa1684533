"""Menus induced by a fixed opponent profile, and structured submenus inside them.

A truthful mechanism presents each bidder with a price per bundle that depends
only on the opponents; extracting the menu means running the mechanism against
a finite family of reports and recording bundle -> payment pairs.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Sequence

from .core import Bundle, Valuation, bits_of, frac_str, mask_of_bits
from .mechanisms import Mechanism, with_player
from .valuations import all_polar, valuation_to_json


class TaxationViolation(ValueError):
    """One bundle was sold at two different prices: the mechanism is not truthful."""

    def __init__(self, bundle: int, m: int, first: tuple, second: tuple):
        self.bundle = bundle
        self.first = first  # (family index, price)
        self.second = second
        super().__init__(
            f"bundle {bits_of(bundle, m)} priced {first[1]} (report #{first[0]}) "
            f"and {second[1]} (report #{second[0]})"
        )


@dataclass
class Menu:
    player: int
    m: int
    entries: dict = field(default_factory=dict)  # mask -> Fraction; absent = unreachable
    opponents: str = ""

    def price(self, S) -> Fraction | None:
        return self.entries.get(S.mask if isinstance(S, Bundle) else S)

    def __contains__(self, S) -> bool:
        return (S.mask if isinstance(S, Bundle) else S) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def bundles(self) -> list:
        return sorted(self.entries)

    def to_json(self) -> dict:
        return {
            "player": self.player,
            "m": self.m,
            "opponents": self.opponents,
            "entries": [{"bundle": bits_of(S, self.m), "price": frac_str(p)} for S, p in sorted(self.entries.items())],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Menu":
        entries = {mask_of_bits(e["bundle"]): Fraction(e["price"]) for e in d["entries"]}
        return cls(d["player"], d["m"], entries, d.get("opponents", ""))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bundle", "size", "price"])
        for S, p in sorted(self.entries.items()):
            w.writerow([bits_of(S, self.m), S.bit_count(), frac_str(p)])
        return buf.getvalue()


def profile_id(valuations: Sequence[Valuation]) -> str:
    blob = json.dumps([valuation_to_json(v) for v in valuations], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def extract_menu(mech: Mechanism, i: int, opponents: Sequence[Valuation], family: Sequence[Valuation] | None = None) -> Menu:
    """Run ``mech`` for every report in ``family`` and collect bundle -> price.

    The default family is every polar-additive valuation on the opponents'
    universe.  A bundle reached at two prices raises :class:`TaxationViolation`.
    If the empty bundle is reachable, prices are shifted so it costs 0.
    """
    m = opponents[0].m if opponents else family[0].m
    if family is None:
        family = all_polar(m)
    seen: dict = {}
    for idx, v in enumerate(family):
        out = mech(with_player(opponents, i, v))
        S = out.bundle_for(i)
        p = Fraction(out.payments[i])
        if S in seen and seen[S][1] != p:
            raise TaxationViolation(S, m, seen[S], (idx, p))
        seen.setdefault(S, (idx, p))
    offset = seen[0][1] if 0 in seen else Fraction(0)
    entries = {S: p - offset for S, (_, p) in seen.items()}
    ident = profile_id(opponents) if opponents else ""
    return Menu(i, m, entries, ident)


@dataclass
class MenuReport:
    price_cap_violations: list  # (S, price)
    gap_violations: list  # (S, T, price difference)

    @property
    def ok(self) -> bool:
        return not self.price_cap_violations and not self.gap_violations


def check_polar_menu(menu: Menu) -> MenuReport:
    """Properties of menus reached by polar-additive reports.

    Every price is at most m, and every strictly larger menu bundle costs at
    least 1/m^3 more than any of its menu subsets.
    """
    m = menu.m
    gap = Fraction(1, m ** 3)
    caps = [(S, p) for S, p in sorted(menu.entries.items()) if p > m]
    gaps = []
    items = sorted(menu.entries.items())
    for S, pS in items:
        for T, pT in items:
            if T != S and S & ~T == 0 and pT - pS < gap:
                gaps.append((S, T, pT - pS))
    return MenuReport(caps, gaps)


@dataclass(frozen=True)
class StructuredSubmenu:
    bundles: frozenset
    common_size: int
    price_band: tuple  # (lowest, highest) price among members
    m: int

    def __len__(self) -> int:
        return len(self.bundles)


def structure_violations(bundles, menu: Menu) -> list:
    """Which same-size / band / superset-gap / price-cap conditions fail (empty list = structured)."""
    m = menu.m
    bundles = sorted(bundles)
    problems = []
    if not bundles:
        return ["empty"]
    if any(S not in menu.entries for S in bundles):
        problems.append("member not in menu")
        return problems
    prices = [menu.entries[S] for S in bundles]
    if max(prices) - min(prices) > Fraction(1, m ** 5):
        problems.append("price band wider than 1/m^5")
    for S, pS in zip(bundles, prices):
        for T, pT in menu.entries.items():
            if T != S and S & ~T == 0 and pT - pS < Fraction(1, m ** 3):
                problems.append(f"superset {bits_of(T, m)} of {bits_of(S, m)} costs less than 1/m^3 more")
                break
    if any(p > m for p in prices):
        problems.append("price above m")
    if len({S.bit_count() for S in bundles}) != 1:
        problems.append("mixed sizes")
    return problems


def is_structured(bundles, menu: Menu) -> bool:
    return not structure_violations(bundles, menu)


def price_bins(menu: Menu) -> dict:
    """Bundles grouped by (size, floor(price * m^5)), keys sorted."""
    m5 = menu.m ** 5
    bins = defaultdict(list)
    for S, p in sorted(menu.entries.items()):
        bins[(S.bit_count(), floor(p * m5))].append(S)
    return dict(sorted(bins.items()))


def find_structured_submenu(menu: Menu) -> StructuredSubmenu | None:
    """Take the most congested price bin (ties: smallest (size, bin)) and verify it."""
    if not menu.entries:
        raise ValueError("menu is empty")
    bins = price_bins(menu)
    key = max(bins, key=lambda b: (len(bins[b]), tuple(-x for x in b)))
    members = bins[key]
    if not is_structured(members, menu):
        return None
    prices = [menu.entries[S] for S in members]
    return StructuredSubmenu(frozenset(members), key[0], (min(prices), max(prices)), menu.m)
