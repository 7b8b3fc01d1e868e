"""ADMM iterations to converge against the penalty rho on the default 10-UAV/50-user scenario."""
import argparse

from skymec import cra, uad
from skymec.channel import compute_channel
from skymec.scenario import generate_random


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--rho", type=float, nargs="+", default=[1.0, 5.0, 10.0, 15.0])
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--users", type=int, default=50)
    p.add_argument("--uavs", type=int, default=10)
    args = p.parse_args()
    print("seed," + ",".join(f"rho={r:g}" for r in args.rho))
    for seed in range(args.seeds):
        sc = generate_random(args.uavs, args.users, seed=seed)
        ch = compute_channel(sc)
        alpha = sc.arrays.S
        beta = cra.solve(sc, ch, alpha).beta
        its = []
        for r in args.rho:
            sol = uad.solve(sc, ch, alpha, beta, uad.AdmmOptions(rho=r))
            its.append(f"{sol.iterations}{'' if sol.converged else '*'}")
        print(f"{seed}," + ",".join(its))
    print("* stopped at the iteration cap")


if __name__ == "__main__":
    main()
