"""Block-coordinate descent over offload split, bandwidth and placement.

Each outer iteration runs the three block solvers in turn.  A block's
output is kept only if it does not raise the total latency; the offload
block, whose per-user problems freeze the CPU shares, first retries with
halved steps before giving up.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import baselines, cra, uad, utod
from .channel import ChannelState, compute_channel
from .cost import (CostBreakdown, DecisionSet, EnergyReport, check_energy_budgets,
                   home_placement, objective)
from .errors import InfeasibleError
from .scenario import NetworkScenario

BLOCKS = ("utod", "cra", "uad")


@dataclass(frozen=True)
class BcdOptions:
    outer_tol: float = 1e-4
    outer_max: int = 30
    order: tuple = BLOCKS
    backtrack_steps: int = 30
    descent_tol: float = 1e-7
    placement: str = "admm"  # or a baseline scheme name, for per-baseline BCD
    cra: cra.CraOptions = field(default_factory=cra.CraOptions)
    admm: uad.AdmmOptions = field(default_factory=uad.AdmmOptions)

    def __post_init__(self):
        if sorted(self.order) != sorted(BLOCKS):
            raise ValueError(f"order must be a permutation of {BLOCKS}, got {self.order}")
        if self.placement != "admm" and self.placement not in baselines.PLACEMENT_SCHEMES:
            raise ValueError(f"unknown placement rule {self.placement!r}")
        if self.outer_max < 1 or self.outer_tol < 0:
            raise ValueError("outer_max must be >= 1 and outer_tol >= 0")


@dataclass(frozen=True)
class BlockStep:
    outer: int
    block: str
    objective: float
    accepted: bool
    seconds: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolveReport:
    objective_trace: tuple
    steps: tuple
    decisions: DecisionSet
    rounded: DecisionSet
    breakdown: CostBreakdown = field(repr=False)
    rounded_breakdown: CostBreakdown = field(repr=False)
    energy: EnergyReport = field(repr=False)
    block_seconds: dict = field(default_factory=dict)
    outer_iterations: int = 0
    converged: bool = False
    placement: uad.PlacementSolution | None = field(default=None, repr=False)
    bandwidth: cra.CraSolution | None = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return self.breakdown.Z

    @property
    def rounded_objective(self) -> float:
        return self.rounded_breakdown.Z

    @property
    def num_users(self) -> int:
        return len(self.decisions.alpha)

    @property
    def avg_latency_ms(self) -> float:
        return 1e3 * self.objective / max(1, self.num_users)

    @property
    def rounded_avg_latency_ms(self) -> float:
        return 1e3 * self.rounded_objective / max(1, self.num_users)

    def to_dict(self) -> dict:
        d = self.decisions
        return {
            "objective": self.objective,
            "rounded_objective": self.rounded_objective,
            "avg_latency_ms": self.avg_latency_ms,
            "rounded_avg_latency_ms": self.rounded_avg_latency_ms,
            "outer_iterations": self.outer_iterations,
            "converged": self.converged,
            "objective_trace": list(self.objective_trace),
            "block_seconds": dict(self.block_seconds),
            "steps": [{"outer": s.outer, "block": s.block, "objective": s.objective,
                       "accepted": s.accepted, "seconds": s.seconds, **s.detail} for s in self.steps],
            "alpha": d.alpha.tolist(),
            "beta": d.beta.tolist(),
            "placement": d.place.tolist(),
            "rounded_placement": self.rounded.place.tolist(),
            "per_user_latency": self.breakdown.total.tolist(),
            "energy_feasible": self.energy.feasible,
            "deadline_violations": list(self.breakdown.deadline_violations),
        }


def initial_decisions(scenario: NetworkScenario) -> DecisionSet:
    """Half of every task offloaded, equal bandwidth, all work at home."""
    a = scenario.arrays
    counts = np.bincount(a.home, minlength=scenario.num_uavs)
    return DecisionSet(a.S / 2.0, 1.0 / counts[a.home], home_placement(scenario), a.home)


def _z(scenario, channel, d) -> float:
    return objective(scenario, channel, d)[0]


def _no_worse(new, old, tol) -> bool:
    return new <= old + tol * max(1.0, abs(old))


class _Runner:
    def __init__(self, scenario, channel, opt: BcdOptions):
        self.sc, self.ch, self.opt = scenario, channel, opt
        self.placement = None
        self.bandwidth = None
        self._uad_key = None

    def utod(self, d, z):
        sol = utod.solve(self.sc, self.ch, d)
        step = sol.alpha - d.alpha
        for k in range(self.opt.backtrack_steps + 1):
            cand = d.replace(alpha=d.alpha + step / 2**k)
            try:
                zc = _z(self.sc, self.ch, cand)
            except InfeasibleError:
                continue
            if _no_worse(zc, z, 0.0):
                return cand, zc, {"halvings": k}
        return d, z, {"halvings": -1}

    def cra(self, d, z):
        sol = cra.solve(self.sc, self.ch, d.alpha, self.opt.cra, beta0=d.beta)
        self.bandwidth = sol
        cand = d.replace(beta=sol.beta)
        return cand, _z(self.sc, self.ch, cand), {"cra_iterations": sol.iterations}

    def uad(self, d, z):
        if self.opt.placement != "admm":
            res = baselines.run_scheme(self.opt.placement, self.sc, self.ch, d.alpha, d.beta)
            cand = d.replace(place=res.decisions.place)
            return cand, res.objective, {"scheme": self.opt.placement}
        key = (d.alpha.tobytes(), d.beta.tobytes())
        if self._uad_key != key:
            # same (alpha, beta) gives the same ADMM run, so skip the repeat
            self.placement = uad.solve(self.sc, self.ch, d.alpha, d.beta, self.opt.admm)
            self._uad_key = key
        sol = self.placement
        cand = d.replace(place=sol.relaxed)
        return cand, _z(self.sc, self.ch, cand), {"admm_iterations": sol.iterations,
                                                  "admm_converged": sol.converged}


def solve(scenario: NetworkScenario, options: BcdOptions | None = None,
          channel: ChannelState | None = None, init: DecisionSet | None = None) -> SolveReport:
    """Alternate the three blocks until the relative change in Z is below ``outer_tol``.

    Raises ``InfeasibleError`` naming the block and outer iteration when a
    block has no feasible point.
    """
    opt = options or BcdOptions()
    ch = channel if channel is not None else compute_channel(scenario)
    run = _Runner(scenario, ch, opt)
    d = init if init is not None else initial_decisions(scenario)
    z = _z(scenario, ch, d)
    trace = [z]
    steps = []
    secs = {b: 0.0 for b in BLOCKS}
    converged = False
    t = 0
    for t in range(1, opt.outer_max + 1):
        z_start = z
        for block in opt.order:
            t0 = time.perf_counter()
            try:
                cand, zc, info = getattr(run, block)(d, z)
            except InfeasibleError as exc:
                raise InfeasibleError(f"{block} at outer iteration {t}: {exc}",
                                      where=f"{block}: {exc.where}") from exc
            dt = time.perf_counter() - t0
            secs[block] += dt
            ok = _no_worse(zc, z, opt.descent_tol)
            if ok:
                d, z = cand, zc
            steps.append(BlockStep(t, block, z, ok, dt, info))
        trace.append(z)
        if abs(z_start - z) <= opt.outer_tol * max(abs(z_start), 1e-300):
            converged = True
            break

    z, bd = objective(scenario, ch, d)
    sets = uad.build_omega(scenario, ch, d.alpha, d.beta)
    P = uad.admm_costs(scenario, ch, d.alpha, d.beta)[1]
    rounded_x, _ = uad.round_placements(d.place, sets, P)
    rd = d.replace(place=rounded_x)
    _, rbd = objective(scenario, ch, rd)
    return SolveReport(
        objective_trace=tuple(trace), steps=tuple(steps), decisions=d, rounded=rd,
        breakdown=bd, rounded_breakdown=rbd, energy=check_energy_budgets(scenario, ch, d, bd),
        block_seconds=secs, outer_iterations=t, converged=converged,
        placement=run.placement, bandwidth=run.bandwidth)
