"""Solve both dragon scenarios over seeded profiles and report the worst verified envy margin.

    python scripts/scenario_sweep.py --boxes 2 3 4 --seeds 10 --regime signed
"""
import argparse
import csv
import sys
import time
import warnings

from dragonshare.errors import DragonShareError
from dragonshare.scenarios import PIECE_GRAB, PLAYER_SWALLOW, solve_scenario_piece, solve_scenario_player
from dragonshare.valuations import random_profile


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--boxes", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--regime", choices=["hungry", "signed"], default="hungry")
    ap.add_argument("--scenario", choices=[PIECE_GRAB, PLAYER_SWALLOW], nargs="+",
                    default=[PIECE_GRAB, PLAYER_SWALLOW])
    args = ap.parse_args(argv)

    out = csv.writer(sys.stdout)
    out.writerow(["scenario", "boxes", "seed", "status", "min_margin", "fuzz", "empty_boxes", "seconds"])
    for scenario in args.scenario:
        solve, players = ((solve_scenario_piece, lambda r: r - 1) if scenario == PIECE_GRAB
                          else (solve_scenario_player, lambda r: r + 1))
        for r in args.boxes:
            for seed in range(args.seeds):
                prof = random_profile(seed, players(r), args.regime)
                t0 = time.perf_counter()
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        res = solve(prof)
                    empty = sum(t is None for t in res.point.box_tiles().values())
                    row = ["ok", f"{res.min_margin:.3e}", f"{res.fuzz:g}", empty]
                except DragonShareError as exc:
                    row = [type(exc).__name__, "", "", ""]
                out.writerow([scenario, r, seed, *row, f"{time.perf_counter() - t0:.3f}"])
                sys.stdout.flush()


if __name__ == "__main__":
    main()
