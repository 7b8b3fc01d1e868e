"""Command line entry point: ``skymec <verb> [flags]``.

Exit status is 0 on success, 1 on a usage or input error and 2 when the
instance has no feasible point.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import baselines, harness, orchestrator, uad
from .channel import compute_channel
from .errors import InfeasibleError
from .scenario import ScenarioError, ScenarioParseError, generate_random, load, save, with_radio

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _ints(text):
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skymec", description="Multi-UAV edge offloading solver and experiments.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def scenario_flags(sp, users=50, uavs=10):
        sp.add_argument("--scenario", help="scenario JSON; overrides the generator flags")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--users", type=int, default=users)
        sp.add_argument("--uavs", type=int, default=uavs)
        sp.add_argument("--friis-exponent", type=int, choices=(1, 2), default=None)

    g = sub.add_parser("generate", help="write a random scenario as JSON")
    scenario_flags(g)
    g.add_argument("--out", help="output file or directory (default: stdout)")

    s = sub.add_parser("solve", help="run the proposed solver")
    scenario_flags(s)
    s.add_argument("--rho", type=float, default=10.0)
    s.add_argument("--out", help="directory for report.json and results.csv")

    b = sub.add_parser("baseline", help="run one comparison scheme")
    scenario_flags(b)
    b.add_argument("--scheme", required=True,
                   choices=sorted(baselines.PLACEMENT_SCHEMES) + ["uniform", "proportional"])
    b.add_argument("--rho", type=float, default=10.0)
    b.add_argument("--own-bcd", action="store_true",
                   help="alternate the scheme with the offload and bandwidth blocks instead of "
                        "reusing the proposed split and bandwidth")
    b.add_argument("--out", help="directory for baseline.json")

    e = sub.add_parser("experiment", help="run the sweeps and write CSV outputs")
    e.add_argument("--scenario")
    e.add_argument("--seed", type=int, default=0, help="seed base")
    e.add_argument("--users", type=_ints, default=tuple(range(5, 55, 5)), help="e.g. 5,10,15")
    e.add_argument("--uavs", type=int, default=10)
    e.add_argument("--rho", type=_floats, default=(1.0, 5.0, 10.0, 15.0), help="e.g. 1,5,10,15")
    e.add_argument("--scheme", default=",".join(harness.PLACEMENT), help="comma-separated schemes")
    e.add_argument("--repeats", type=int, default=10)
    e.add_argument("--friis-exponent", type=int, choices=(1, 2), default=2)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", default="results")

    c = sub.add_parser("compare", help="summarise an experiment directory")
    c.add_argument("--out", default="results", help="experiment output directory")
    return p


def _scenario(args):
    sc = load(args.scenario) if args.scenario else generate_random(args.uavs, args.users, seed=args.seed)
    if args.friis_exponent is not None and sc.radio.friis_exponent != args.friis_exponent:
        sc = with_radio(sc, friis_exponent=args.friis_exponent)
    return sc


def _write_json(out, name, doc):
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / name).write_text(json.dumps(doc, indent=1) + "\n")


def _cmd_generate(args):
    sc = _scenario(args)
    if args.out is None:
        from .scenario import to_dict
        print(json.dumps(to_dict(sc), indent=1))
        return
    path = Path(args.out)
    if path.suffix != ".json":
        path.mkdir(parents=True, exist_ok=True)
        path = path / "scenario.json"
    save(sc, path)
    print(path)


def _cmd_solve(args):
    sc = _scenario(args)
    rep = orchestrator.solve(sc, orchestrator.BcdOptions(admm=uad.AdmmOptions(rho=args.rho)))
    print(f"users {sc.num_users}  uavs {sc.num_uavs}  outer iterations {rep.outer_iterations}  "
          f"converged {rep.converged}")
    print(f"average latency {rep.avg_latency_ms:.3f} ms (relaxed), {rep.rounded_avg_latency_ms:.3f} ms (rounded)")
    if args.out:
        _write_json(args.out, "report.json", rep.to_dict())
        path = Path(args.out) / "results.csv"
        new = not path.exists()
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if new:
                w.writerow(["seed", "users", "uavs", "rho", "objective", "rounded_objective",
                            "avg_latency_ms", "outer_iterations", "converged"])
            w.writerow([sc.rng_seed, sc.num_users, sc.num_uavs, args.rho, rep.objective,
                        rep.rounded_objective, rep.avg_latency_ms, rep.outer_iterations, rep.converged])


def _cmd_baseline(args):
    sc = _scenario(args)
    admm = uad.AdmmOptions(rho=args.rho)
    if args.scheme in ("uniform", "proportional"):
        rep = orchestrator.solve(sc, orchestrator.BcdOptions(admm=admm))
        d = rep.decisions
        beta = (baselines.bandwidth_uniform(sc) if args.scheme == "uniform"
                else baselines.bandwidth_proportional(sc, d.alpha))
        ch = compute_channel(sc)
        rate = ch.uplink_rate(beta, sc)
        doc = {"scheme": args.scheme, "beta": beta.tolist(), "rate": rate.tolist(),
               "mean_tx_latency": float((d.alpha / rate).mean())}
        print(f"{args.scheme}: mean transmission latency {doc['mean_tx_latency']:.3f} s")
    else:
        rule = args.scheme if args.own_bcd else "admm"
        rep = orchestrator.solve(sc, orchestrator.BcdOptions(admm=admm, placement=rule))
        ch = compute_channel(sc)
        res = baselines.run_scheme(args.scheme, sc, ch, rep.decisions.alpha, rep.decisions.beta)
        doc = {"scheme": res.scheme, "objective": res.objective,
               "avg_latency_ms": 1e3 * res.mean_latency, "bs_offloaded_bytes": res.bs_offloaded_bytes,
               "placement_feasible": res.placement_feasible, "energy_feasible": res.energy.feasible,
               "placement": res.decisions.place.tolist(), "runtime_s": res.runtime}
        print(f"{res.scheme}: average latency {doc['avg_latency_ms']:.3f} ms")
    if args.out:
        _write_json(args.out, "baseline.json", doc)


def _cmd_experiment(args):
    schemes = tuple(s for s in args.scheme.split(",") if s)
    spec = harness.ExperimentSpec(
        scenario_path=args.scenario, num_uavs=args.uavs, users=args.users, rhos=args.rho,
        schemes=schemes, repeats=args.repeats, seed_base=args.seed, out_dir=args.out,
        friis_exponent=args.friis_exponent, workers=args.workers)
    out = harness.run(spec)
    print(out)


def _cmd_compare(args):
    cmp = harness.compare(args.out)
    print(cmp.text())


COMMANDS = {"generate": _cmd_generate, "solve": _cmd_solve, "baseline": _cmd_baseline,
            "experiment": _cmd_experiment, "compare": _cmd_compare}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"skymec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        COMMANDS[args.verb](args)
    except InfeasibleError as exc:
        print(f"skymec: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ScenarioError, ScenarioParseError, ValueError, FileNotFoundError) as exc:
        print(f"skymec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
