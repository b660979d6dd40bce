"""Exhaustive census of set families for small n: how many satisfy the dragon condition, and
whether both tree strategies and the brute-force search agree on every one of them.

    python scripts/lemma_census.py --max-n 4
"""
import argparse
import itertools
import time

from dragonshare.marriage import (SetFamily, brute_force_tree_representatives, check_dragon_condition,
                                  is_representative_tree, spanning_tree_representatives)


def subsets(n):
    return [frozenset(c) for k in range(1, n + 1) for c in itertools.combinations(range(1, n + 1), k)]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=4)
    args = ap.parse_args(argv)
    for n in range(2, args.max_n + 1):
        t0 = time.perf_counter()
        total = holds = bad = 0
        for sets in itertools.product(subsets(n), repeat=n - 1):
            fam = SetFamily(n, sets)
            total += 1
            ok = check_dragon_condition(fam)
            holds += ok
            brute = brute_force_tree_representatives(fam)
            if ok != (brute is not None):
                bad += 1
            elif ok:
                bad += not all(is_representative_tree(fam, spanning_tree_representatives(fam, s))
                               for s in ("minimal", "decompose"))
        print(f"n={n}: {total} families, {holds} satisfy the condition, {bad} disagreements, "
              f"{time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
