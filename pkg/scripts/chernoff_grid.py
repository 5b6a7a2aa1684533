"""Exact binomial tails against exp(-p m eps^2) and the standard exp(-mu eps^2/3), exp(-mu eps^2/2) forms.

Writes one CSV row per grid point and prints how many points each form misses.
"""
import argparse
import csv
from fractions import Fraction
from math import comb

from menuhard.prob import ExpBound, chernoff_bound


def tails(m, p, eps):
    a, b = p.numerator, p.denominator
    pmf = [comb(m, k) * a ** k * (b - a) ** (m - k) for k in range(m + 1)]
    mu = p * m
    hi = sum(w for k, w in enumerate(pmf) if k > (1 + eps) * mu)
    lo = sum(w for k, w in enumerate(pmf) if k < (1 - eps) * mu)
    return Fraction(hi, b ** m), Fraction(lo, b ** m)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="chernoff_grid.csv")
    ap.add_argument("--m-max", type=int, default=500)
    args = ap.parse_args()
    misses = {"stated-upper": 0, "stated-lower": 0, "third-upper": 0, "half-lower": 0}
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "m", "epsilon", "upper_tail", "lower_tail", "stated_bound", "stated_holds_upper",
                    "stated_holds_lower"])
        for i in range(1, 10):
            p = Fraction(i, 10)
            for m in range(10, args.m_max + 1, 10):
                for j in range(1, 11):
                    eps = Fraction(j, 10)
                    hi, lo = tails(m, p, eps)
                    stated = chernoff_bound(p, m, eps)
                    up_ok, lo_ok = stated.compare(hi), stated.compare(lo)
                    misses["stated-upper"] += up_ok is not True
                    misses["stated-lower"] += lo_ok is not True
                    misses["third-upper"] += ExpBound.exp_neg(p * m * eps * eps / 3, 30).compare(hi) is not True
                    misses["half-lower"] += ExpBound.exp_neg(p * m * eps * eps / 2, 30).compare(lo) is not True
                    w.writerow([p, m, eps, f"{float(hi):.6e}", f"{float(lo):.6e}", stated.decimal(),
                                str(up_ok).lower(), str(lo_ok).lower()])
    for name, count in misses.items():
        print(f"{name:>13}: {count} grid points where the exact tail exceeds the bound")


if __name__ == "__main__":
    main()
