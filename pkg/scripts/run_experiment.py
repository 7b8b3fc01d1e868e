"""Full sweep: user-count sweep, rho sweep, traces and the fixed-instance comparison."""
import argparse

from skymec import harness


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--quick", action="store_true", help="two user counts, one seed")
    args = p.parse_args()
    if args.quick:
        spec = harness.quick_spec(out_dir=args.out, seed_base=args.seed, workers=args.workers)
    else:
        spec = harness.ExperimentSpec(out_dir=args.out, repeats=args.repeats, seed_base=args.seed,
                                      workers=args.workers)
    out = harness.run(spec)
    print(harness.compare(out).text())
    print(f"outputs in {out}")


if __name__ == "__main__":
    main()
