"""Optimise the walking gait and compare it with plain random sampling."""
import argparse

import numpy as np

from eaco import EacoParams, cli, gait, run

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", type=int, default=5)
ap.add_argument("--iterations", type=int, default=60)
ap.add_argument("--draws", type=int, default=100)
args = ap.parse_args()

for seed in range(args.seeds):
    params, rand_fit = gait.random_search(args.draws, np.random.default_rng(10_000 + seed))
    best, rec = run(gait.gait_problem(),
                    EacoParams(seed=seed, max_iterations=args.iterations, **cli.KIND_EACO_DEFAULTS["gait"]))
    print(f"seed {seed}: colony {-best.objective:7.3f} m   random best {rand_fit:7.3f} m   "
          f"evaluations {rec.evaluations}")
