"""Fewest queries that identify the hidden star, from both game-tree searches, against the scan strategy."""
import argparse

from menuhard.core import iter_masks
from menuhard.games import ScanStrategy, decision_tree_depth, fewest_queries_against_adversary, identification_game
from menuhard.valuations import default_star_t


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=6)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--max-size", type=int, default=6)
    args = ap.parse_args()
    cap = args.k * default_star_t(args.m)
    print("size,decision_tree,adversary_bfs,scan")
    for size in range(1, args.max_size + 1):
        sub = list(iter_masks(args.m, args.k))[:size]
        scan = identification_game(ScanStrategy(sub, cap), args.m, args.k, sub).submenu_queries
        print(f"{size},{decision_tree_depth(args.m, args.k, sub)},"
              f"{fewest_queries_against_adversary(args.m, args.k, sub)},{scan}")


if __name__ == "__main__":
    main()
