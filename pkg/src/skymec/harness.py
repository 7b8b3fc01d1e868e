"""Experiment sweeps, CSV outputs and the scheme comparison table.

Every output is a pure function of the ``ExperimentSpec`` (including its
seed base), so two runs of the same spec write byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy

from . import baselines, cra, orchestrator, uad
from .channel import compute_channel
from .errors import InfeasibleError
from .scenario import NetworkScenario, generate_random, load, with_radio

PLACEMENT = ("proposed", "proposed_rounded", "centralized", "greedy", "exhaustive", "non_collaboration")
ALLOCATORS = ("lagrangian", "proportional", "uniform")
ORDER = ("proposed", "exhaustive", "greedy", "non_collaboration")


@dataclass(frozen=True)
class ExperimentSpec:
    experiment_id: str = "default"
    scenario_path: str | None = None
    num_uavs: int = 10
    users: tuple = tuple(range(5, 55, 5))
    rhos: tuple = (1.0, 5.0, 10.0, 15.0)
    schemes: tuple = PLACEMENT
    repeats: int = 10
    seed_base: int = 0
    out_dir: str = "results"
    region_side_m: float = 400.0
    friis_exponent: int = 2
    fixed_uavs: int = 3
    fixed_users: int = 10
    exhaustive_guard: int = baselines.DEFAULT_GUARD
    workers: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if not self.users or not self.rhos or not self.schemes:
            raise ValueError("users, rhos and schemes must be non-empty")
        unknown = set(self.schemes) - set(PLACEMENT)
        if unknown:
            raise ValueError(f"unknown schemes {sorted(unknown)}")
        if self.friis_exponent not in (1, 2):
            raise ValueError("friis_exponent must be 1 or 2")

    @property
    def seeds(self) -> list:
        return [self.seed_base + i for i in range(self.repeats)]

    def hashed_fields(self) -> dict:
        d = asdict(self)
        for k in ("out_dir", "workers"):
            d.pop(k)
        return d


def config_hash(spec: ExperimentSpec) -> str:
    blob = json.dumps(spec.hashed_fields(), sort_keys=True, default=list)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def make_scenario(spec: ExperimentSpec, num_uavs: int, num_users: int, seed: int) -> NetworkScenario:
    if spec.scenario_path:
        sc = load(spec.scenario_path)
    else:
        sc = generate_random(num_uavs, num_users, spec.region_side_m, seed)
    if sc.radio.friis_exponent != spec.friis_exponent:
        sc = with_radio(sc, friis_exponent=spec.friis_exponent)
    return sc


# ---------------------------------------------------------------------------
# One sweep point
# ---------------------------------------------------------------------------

def evaluate_point(scenario: NetworkScenario, schemes=PLACEMENT, guard=baselines.DEFAULT_GUARD,
                   options: orchestrator.BcdOptions | None = None) -> dict:
    """Solve once and score every scheme and bandwidth allocator.

    The baselines reuse the proposed offload split and bandwidth, so they
    differ from the proposed method only in where the work runs.  Schemes
    that cannot run (exhaustive beyond its guard) are left out.
    """
    ch = compute_channel(scenario)
    rep = orchestrator.solve(scenario, options, channel=ch)
    d = rep.decisions
    n = scenario.num_users
    out = {"latency": {}, "bs_bits": {}, "offloaded_bits": float(d.alpha.sum()),
           "rate": {}, "tx_latency": {}, "report": rep}
    if "proposed" in schemes:
        out["latency"]["proposed"] = rep.objective / n
        out["bs_bits"]["proposed"] = float((d.place[:, -1] * d.alpha).sum())
    if "proposed_rounded" in schemes:
        out["latency"]["proposed_rounded"] = rep.rounded_objective / n
        out["bs_bits"]["proposed_rounded"] = float((rep.rounded.place[:, -1] * d.alpha).sum())
    sets = uad.build_omega(scenario, ch, d.alpha, d.beta)
    for name in baselines.PLACEMENT_SCHEMES:
        if name not in schemes:
            continue
        if name == "exhaustive" and baselines.enumeration_count(sets, d.place.shape) > guard:
            continue
        kw = {"size_guard": guard} if name == "exhaustive" else {}
        res = baselines.run_scheme(name, scenario, ch, d.alpha, d.beta, sets=sets, **kw)
        out["latency"][name] = res.objective / n
        out["bs_bits"][name] = res.bs_offloaded_bits
    betas = {"lagrangian": d.beta,
             "proportional": baselines.bandwidth_proportional(scenario, d.alpha),
             "uniform": baselines.bandwidth_uniform(scenario)}
    a = scenario.arrays
    for name, beta in betas.items():
        rate = ch.uplink_rate(beta, scenario)
        with np.errstate(divide="ignore"):
            t_up = np.where(d.alpha > 0, d.alpha / rate, 0.0)
        out["rate"][name] = float(rate.mean())
        out["tx_latency"][name] = float(t_up.mean())
    out["S_total"] = float(a.S.sum())
    return out


def _point_job(args):
    spec, num_uavs, n, seed = args
    try:
        res = evaluate_point(make_scenario(spec, num_uavs, n, seed), spec.schemes, spec.exhaustive_guard)
        res.pop("report")
        return (n, seed, res, None)
    except InfeasibleError as exc:
        return (n, seed, None, str(exc))


def _map(spec, jobs):
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            return list(ex.map(_point_job, jobs))
    return [_point_job(j) for j in jobs]


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, float):
        return repr(round(x, 12))
    return x


def write_csv(path: Path, header, rows, chash: str):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*header, "config_hash"])
        for r in rows:
            w.writerow([*(_fmt(x) for x in r), chash])


def _stats(values):
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0, int(v.size)


def run(spec: ExperimentSpec) -> Path:
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(spec)
    failures = []
    seed0 = spec.seed_base
    base_users = max(spec.users)

    # convergence traces on the base scenario
    sc = make_scenario(spec, spec.num_uavs, base_users, seed0)
    ch = compute_channel(sc)
    alpha = sc.arrays.S
    bw = cra.solve(sc, ch, alpha)
    rows = []
    for i, beta_i in enumerate(bw.trace):
        for u, r in enumerate(ch.uplink_rate(beta_i, sc)):
            rows.append((i, int(sc.users[u].id), float(r)))
    write_csv(out / "cra_trace.csv", ("iteration", "user", "rate"), rows, chash)

    trace_rows, sweep_rows = [], []
    for seed in spec.seeds:
        s = make_scenario(spec, spec.num_uavs, base_users, seed)
        c = compute_channel(s)
        b = cra.solve(s, c, s.arrays.S).beta
        for rho in spec.rhos:
            sol = uad.solve(s, c, s.arrays.S, b, uad.AdmmOptions(rho=float(rho)))
            sweep_rows.append((seed, float(rho), sol.iterations, sol.converged))
            if seed == seed0:
                for row in sol.trace:
                    trace_rows.append((seed, float(rho), row.iteration, row.objective, row.primal_residual,
                                       row.dual_residual, row.consensus_residual, row.aug_lagrangian,
                                       row.block_increase))
    write_csv(out / "admm_trace.csv", ("seed", "rho", "iteration", "objective", "primal_residual",
                                       "dual_residual", "consensus_residual", "aug_lagrangian",
                                       "block_increase"),
              trace_rows, chash)
    write_csv(out / "rho_sweep.csv", ("seed", "rho", "iterations", "converged"), sweep_rows, chash)

    # user-count sweep
    jobs = [(spec, spec.num_uavs, n, seed) for n in spec.users for seed in spec.seeds]
    results = _map(spec, jobs)
    lat, bs, rate, tx = {}, {}, {}, {}
    for n, seed, res, err in results:
        if err is not None:
            failures.append({"users": n, "seed": seed, "error": err})
            continue
        for k, v in res["latency"].items():
            lat.setdefault((k, n), []).append(v)
        for k, v in res["bs_bits"].items():
            frac = v / res["offloaded_bits"] if res["offloaded_bits"] > 0 else 0.0
            bs.setdefault((k, n), []).append((v, frac))
        for k in ALLOCATORS:
            rate.setdefault((k, n), []).append(res["rate"][k])
            tx.setdefault((k, n), []).append(res["tx_latency"][k])
    lat_rows = [(k, n, *_stats(lat[(k, n)]))
                for k in spec.schemes for n in spec.users if (k, n) in lat]
    write_csv(out / "latency_vs_users.csv", ("scheme", "users", "mean", "stddev", "count"), lat_rows, chash)
    bs_rows = []
    for k in spec.schemes:
        for n in spec.users:
            if (k, n) in bs:
                v = np.array(bs[(k, n)])
                bs_rows.append((k, n, float(v[:, 0].mean()), float(v[:, 1].mean()), len(v)))
    write_csv(out / "bs_offload.csv", ("scheme", "users", "mean_bits", "mean_fraction", "count"), bs_rows, chash)
    rate_rows = [(k, n, *_stats(rate[(k, n)])[:2], *_stats(tx[(k, n)]))
                 for k in ALLOCATORS for n in spec.users if (k, n) in rate]
    write_csv(out / "rate_vs_users.csv", ("allocator", "users", "mean_rate", "stddev_rate",
                                          "mean_tx_latency", "stddev_tx_latency", "count"), rate_rows, chash)

    # fixed small instance family
    jobs = [(spec, spec.fixed_uavs, spec.fixed_users, seed) for seed in spec.seeds]
    fixed_rows = []
    for n, seed, res, err in _map(spec, jobs):
        if err is not None:
            failures.append({"users": n, "seed": seed, "fixed": True, "error": err})
            continue
        for k in spec.schemes:
            if k in res["latency"]:
                fixed_rows.append((k, seed, 1e3 * res["latency"][k]))
    write_csv(out / "fixed_instance.csv", ("scheme", "seed", "latency_ms"), fixed_rows, chash)

    summary = {
        "experiment_id": spec.experiment_id,
        "config_hash": chash,
        "spec": spec.hashed_fields(),
        "seeds": spec.seeds,
        "failures": failures,
        "environment": {"python": sys.version.split()[0], "numpy": np.__version__,
                        "scipy": scipy.__version__, "platform": platform.machine()},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True, default=list) + "\n")
    return out


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class Comparison:
    means: dict
    gaps: dict
    checks: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        lines = [f"{'scheme':<20}{'mean latency (ms)':>20}{'proposed gain (%)':>20}"]
        for k, v in self.means.items():
            g = self.gaps.get(k)
            lines.append(f"{k:<20}{v:>20.3f}{'' if g is None else f'{g:>20.2f}'}")
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
        return "\n".join(lines)


def gain_percent(proposed: float, other: float) -> float:
    """How much lower the proposed latency is, as a percentage of ``other``."""
    return 100.0 * (other - proposed) / other


def ordering_checks(means: dict, tol: float = 1e-9) -> tuple:
    missing = [k for k in (*ORDER, "centralized") if k not in means]
    if missing:
        raise ValueError(f"missing scheme columns: {missing}")
    p, c, e, g, n = (means[k] for k in ("proposed", "centralized", "exhaustive", "greedy",
                                         "non_collaboration"))
    chain = all(x <= y * (1 + tol) for x, y in zip((p, e, g), (e, g, n)))
    return (
        Check("ordering", chain, f"proposed {p:.4f} <= exhaustive {e:.4f} <= greedy {g:.4f} "
                                 f"<= non_collaboration {n:.4f}"),
        Check("centralized", abs(p - c) <= 0.01 * c, f"proposed within {100 * abs(p - c) / c:.4f}% of centralized"),
        Check("exhaustive_gap", gain_percent(p, e) >= 2.0, f"{gain_percent(p, e):.3f}% below exhaustive (floor 2%)"),
        Check("greedy_gap", gain_percent(p, g) >= 20.0, f"{gain_percent(p, g):.3f}% below greedy (floor 20%)"),
    )


def compare_means(means: dict) -> Comparison:
    if "proposed" not in means:
        raise ValueError("missing scheme columns: ['proposed']")
    gaps = {k: gain_percent(means["proposed"], v) for k, v in means.items() if k != "proposed"}
    return Comparison(means=dict(means), gaps=gaps, checks=ordering_checks(means))


def compare(results_dir) -> Comparison:
    """Per-scheme means of ``fixed_instance.csv`` and the ordering checks.

    Also writes ``comparison.csv`` next to the inputs.
    """
    path = Path(results_dir) / "fixed_instance.csv"
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run an experiment first")
    vals, chash = {}, ""
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals.setdefault(row["scheme"], []).append(float(row["latency_ms"]))
            chash = row["config_hash"]
    means = {k: float(np.mean(v)) for k, v in vals.items()}
    cmp = compare_means(means)
    rows = [(k, v, cmp.gaps.get(k, 0.0)) for k, v in cmp.means.items()]
    rows += [(f"check:{c.name}", float(c.passed), c.detail) for c in cmp.checks]
    write_csv(Path(results_dir) / "comparison.csv", ("scheme", "mean_latency_ms", "proposed_gain_percent"),
              rows, chash)
    return cmp


def quick_spec(**kw) -> ExperimentSpec:
    """Small spec for smoke runs."""
    base = ExperimentSpec(users=(5, 10), repeats=1, num_uavs=4, rhos=(5.0, 10.0))
    return replace(base, **kw)
