"""Iterations needed to reach a target on G1, EACO against GA and SA.

Runs that never reach the target count as infinitely slow, so the median is
"inf" once half the runs fail.
"""
import argparse
import math

import numpy as np

from eaco import cli

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", type=int, default=20)
ap.add_argument("--target", type=float, default=-14.0)
ap.add_argument("--iterations", type=int, default=1000)
args = ap.parse_args()

cfg = cli.load_config("bench")
cfg.problem["id"] = "g1"
cfg.target, cfg.max_iterations = args.target, args.iterations

print(f"{'algo':6s} {'reached':>8s} {'median':>8s} {'evals':>8s}")
for algo in ("eaco", "ga", "sa"):
    its, evals = [], []
    for seed in range(args.seeds):
        _, rec, _ = cli.run_one(cfg, algo, seed)
        hit = rec.iterations_to(args.target)
        its.append(math.inf if hit is None else hit)
        evals.append(rec.evaluations)
    reached = sum(np.isfinite(its))
    print(f"{algo:6s} {reached:>5d}/{args.seeds:<2d} {np.median(its):8g} {np.mean(evals):8.0f}")
