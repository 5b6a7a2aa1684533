"""Exact audit of each probabilistic claim over increasing m; prints the first m where the verdict flips."""
import argparse
import csv
from fractions import Fraction

from menuhard.prob import CLAIM_CSV_HEADER, crossover

SWEEPS = {
    "covered-items": (range(10, 1001, 10), {"n": 3}),
    "demand-concentration": (range(10, 401, 10), {"n": 4}),
    "small-value": ([r * r for r in range(2, 41)], {"eps": Fraction(1, 4)}),
    "opt-event": ([r * r for r in range(2, 33)], {}),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="claim_crossovers.csv")
    args = ap.parse_args()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CLAIM_CSV_HEADER)
        for claim, (ms, kw) in SWEEPS.items():
            reports, flip = crossover(claim, ms, **kw)
            w.writerows(r.csv_row() for r in reports)
            first = reports[0]
            print(f"{claim:>21}: holds={first.holds} at m={first.m}, flip at m={flip}")


if __name__ == "__main__":
    main()
