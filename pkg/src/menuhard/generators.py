"""Seeded random instances: structured menus with prices at or inside the band edges."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .core import iter_masks
from .menus import Menu

GRANULARITY = 16  # price grid is 1/(m^5 * GRANULARITY)


def derive_rng(master: int, *keys: int) -> np.random.Generator:
    """Generator for one trial: SeedSequence(master) with the trial counter(s) as spawn key."""
    return np.random.default_rng(np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys)))


def random_submenu(m: int, k: int, size: int, rng: np.random.Generator) -> list:
    pool = list(iter_masks(m, k))
    if size > len(pool):
        raise ValueError(f"only {len(pool)} bundles of size {k} among {m} items")
    picks = rng.choice(len(pool), size=size, replace=False)
    return sorted(pool[int(i)] for i in picks)


def structured_menu(m: int, submenu, rng: np.random.Generator, edge: bool = False, extra_supersets: int = 3,
                    extra_others: int = 3) -> Menu:
    """A menu in which ``submenu`` is structured.

    With ``edge`` the member prices span exactly 1/m^5 and every listed
    superset costs exactly 1/m^3 more than its dearest member subset;
    otherwise both sit strictly inside those limits.
    """
    submenu = sorted(submenu)
    band = Fraction(1, m ** 5)
    gap = Fraction(1, m ** 3)
    unit = band / GRANULARITY
    top_base = (m - band) / unit
    base = int(rng.integers(0, int(top_base) + 1)) * unit
    if edge:
        offsets = [band * int(rng.integers(0, 2)) for _ in submenu]
        if len(submenu) >= 2:
            offsets[0], offsets[-1] = Fraction(0), band
    else:
        offsets = [unit * int(rng.integers(0, GRANULARITY)) for _ in submenu]
    entries = {S: base + off for S, off in zip(submenu, offsets)}
    entries.setdefault(0, Fraction(0))
    full = (1 << m) - 1
    for _ in range(extra_supersets):
        S = submenu[int(rng.integers(0, len(submenu)))]
        free = [j for j in range(m) if not S >> j & 1]
        if not free:
            continue
        add = rng.choice(free, size=int(rng.integers(1, len(free) + 1)), replace=False)
        T = S | sum(1 << int(j) for j in add)
        floor_price = max(entries[M] for M in submenu if M & ~T == 0 and M != T) + gap
        price = floor_price if edge else floor_price + unit * int(rng.integers(1, GRANULARITY * m + 1))
        entries[T] = max(entries.get(T, price), price)
    members = set(submenu)
    for _ in range(extra_others):
        U = int(rng.integers(1, full + 1))
        if U in entries or U in members or any(M & ~U == 0 for M in submenu):
            continue
        entries[U] = unit * int(rng.integers(0, int(m / unit) + 1))
    return Menu(0, m, dict(sorted(entries.items())), "synthetic")
