"""Scheme comparison on the fixed 3-UAV/10-user family, one row per seed plus means."""
import argparse

import numpy as np

from skymec import harness
from skymec.scenario import generate_random


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--uavs", type=int, default=3)
    p.add_argument("--users", type=int, default=10)
    args = p.parse_args()
    vals = {}
    for seed in range(args.seeds):
        res = harness.evaluate_point(generate_random(args.uavs, args.users, seed=seed))
        for k, v in res["latency"].items():
            vals.setdefault(k, []).append(1e3 * v)
        print(f"seed {seed}: " + ", ".join(f"{k} {1e3 * v:.1f} ms" for k, v in res["latency"].items()))
    print(harness.compare_means({k: float(np.mean(v)) for k, v in vals.items()}).text())


if __name__ == "__main__":
    main()
