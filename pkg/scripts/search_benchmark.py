"""Balanced-point search over seeded random profiles: residual, evaluations and wall time.

    python scripts/search_benchmark.py --players 1 2 3 4 --seeds 20
"""
import argparse
import csv
import sys
import time

from dragonshare.errors import SearchFailure
from dragonshare.kkm import SolverParams, find_balanced_point, functional_from_valuations
from dragonshare.valuations import random_profile


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--players", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--regime", choices=["hungry", "signed"], default="hungry")
    ap.add_argument("--eps-fuzz", type=float, default=SolverParams.eps_fuzz)
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout)
    out.writerow(["players", "seed", "ok", "residual", "evaluations", "seconds"])
    for n in args.players:
        for seed in range(args.seeds):
            fp = functional_from_valuations(random_profile(seed, n, args.regime), args.eps_fuzz)
            t0 = time.perf_counter()
            try:
                bp, ok = find_balanced_point(fp, seed=seed), True
            except SearchFailure as exc:
                bp, ok = exc.best, False
            dt = time.perf_counter() - t0
            out.writerow([n, seed, int(ok), f"{bp.residual:.3e}", bp.evaluations, f"{dt:.3f}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
