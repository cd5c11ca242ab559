"""Outer-iteration objective traces of both algorithms on a few drops.

    python3 scripts/convergence_study.py --users 6 --antennas 6 --seeds 0 1 2 --out conv.csv
"""

import argparse
import csv
import time

from fa_rsma.harness.config import ExperimentConfig
from fa_rsma.harness.experiment import build_scenario
from fa_rsma.perfect.ao import AoConfig, run_algorithm1
from fa_rsma.robust.ao import run_algorithm2


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--users", type=int, default=6)
    ap.add_argument("--antennas", type=int, default=6)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--algorithm", choices=("1", "2", "both"), default="both")
    ap.add_argument("--max-outer", type=int, default=50)
    ap.add_argument("--out", default="convergence_study.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(n_users=args.users, n_antennas=args.antennas)
    algs = {"1": run_algorithm1, "2": run_algorithm2}
    chosen = ("1", "2") if args.algorithm == "both" else (args.algorithm,)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["algorithm", "seed", "outer", "objective"])
        for seed in args.seeds:
            sc = build_scenario(cfg, seed, 30.0, cfg.s0_shares(30.0)[0], 3.0, False)
            for a in chosen:
                t0 = time.perf_counter()
                res = algs[a](sc, AoConfig(n3_max=args.max_outer))
                for i, v in enumerate(res.state.history, 1):
                    w.writerow([a, seed, i, repr(v)])
                status = f"converged after {res.outer_iterations}" if res.state.converged else f"not converged in {res.outer_iterations}"
                print(f"algorithm {a} seed {seed}: objective {res.objective:.6f}, {status} outer iterations, {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
