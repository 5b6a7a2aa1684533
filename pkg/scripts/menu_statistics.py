"""Menu and structured-submenu sizes for VCG against random polar opponents."""
import argparse
import csv
from fractions import Fraction

from menuhard.generators import derive_rng
from menuhard.mechanisms import vcg_auction
from menuhard.menus import extract_menu, find_structured_submenu, price_bins
from menuhard.valuations import random_polar


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0, help="master seed")
    ap.add_argument("--out", default="menu_statistics.csv")
    args = ap.parse_args()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "n", "trial", "menu_size", "bins", "submenu_size"])
        for m in range(2, 6):
            for n in (2, 3):
                sizes = []
                for trial in range(args.seeds):
                    opp = [random_polar(m, Fraction(1, n), derive_rng(args.seed, m, n, trial, j)) for j in range(n - 1)]
                    menu = extract_menu(vcg_auction, 0, opp)
                    sub = find_structured_submenu(menu)
                    size = 0 if sub is None else len(sub)
                    sizes.append(size)
                    w.writerow([m, n, trial, len(menu), len(price_bins(menu)), size])
                print(f"m={m} n={n}: mean submenu size {sum(sizes) / len(sizes):.2f}, max {max(sizes)}")


if __name__ == "__main__":
    main()
