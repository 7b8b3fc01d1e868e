"""Placement of offloaded work: relaxed ADMM plus rounding.

The relaxed problem is linear in the placement matrix ``X`` and couples
the site blocks only through the row equality ``sum_s X[u, s] = 1``.  The
blocks (home UAV per origin, each neighbour UAV, the base station) each
live in a box cut by a capacity halfspace and an energy halfspace.  One
ADMM iteration minimises the augmented Lagrangian exactly over the home
block, then jointly over all neighbour blocks, then over the base-station
block, and finally moves the per-user multiplier by ``rho`` times the row
residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .channel import ChannelState
from .cost import masses, path_costs, site_capacity, site_kappa
from .errors import InfeasibleError
from .scenario import NetworkScenario

PROJ_TOL = 1e-8


# ---------------------------------------------------------------------------
# Projection onto box + two nonnegative halfspaces
# ---------------------------------------------------------------------------

def project_feasible(y, a, b, e=None, c=np.inf, tol=PROJ_TOL, where="block"):
    """Euclidean projection of ``y`` onto {0<=x<=1, a.x<=b, e.x<=c}, a, e >= 0.

    Solved through the dual: x = clip(y - mu a - nu e, 0, 1).  With one
    active halfspace the multiplier is exact; with both, mu is bisected and
    nu solved exactly for each trial.
    """
    y = np.ascontiguousarray(y, dtype=float)
    a = np.ascontiguousarray(a, dtype=float)
    e = np.zeros_like(y) if e is None else np.ascontiguousarray(e, dtype=float)
    if b < 0:
        raise InfeasibleError(f"{where}: capacity budget {b!r} is negative", where=f"{where} capacity")
    if c < 0:
        raise InfeasibleError(f"{where}: energy budget is below its floor ({c:.6g} J left)",
                              where=f"{where} energy")
    if y.size == 0:
        return y.copy()
    return _kernels.project(y, a, float(b), e, float(c), tol)


# ---------------------------------------------------------------------------
# Feasible sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OmegaSet:
    """One placement block: entries X[rows, col] and their two budgets."""

    name: str
    rows: np.ndarray
    col: int
    cap_weight: np.ndarray
    energy_weight: np.ndarray
    cap_limit: float = 1.0
    energy_limit: float = np.inf

    def project(self, y):
        return project_feasible(y, self.cap_weight, self.cap_limit, self.energy_weight,
                                self.energy_limit, where=self.name)

    def contains(self, x, tol=1e-6) -> bool:
        x = np.asarray(x)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        if self.cap_weight @ x > self.cap_limit + tol:
            return False
        if np.isfinite(self.energy_limit) and self.energy_weight @ x > self.energy_limit + tol * max(1.0, self.energy_limit):
            return False
        return True


def build_omega(scenario: NetworkScenario, channel: ChannelState, alpha, beta):
    """Feasible sets for the current (alpha, beta).

    Cross-block energy terms (forwarding energy, the part of hover time that
    depends on placement) are replaced by placement-independent floors, so
    every set depends on its own block only.
    """
    a = scenario.arrays
    V = scenario.num_uavs
    alpha = np.asarray(alpha, dtype=float)
    pc = path_costs(scenario, channel, alpha, beta)
    m = masses(scenario, alpha)
    F = site_capacity(scenario)
    kap = site_kappa(scenario)
    e_site = kap[None, :] * (m[:, None] * F[None, :]) ** 2 * a.C[:, None] * alpha[:, None]
    usable = np.isfinite(pc.path)
    sets = []
    for v in range(V):
        rows = a.members[v]
        rows = rows[usable[rows, v]]
        up = pc.t_up[rows][alpha[rows] > 0]
        floor = a.P_hov[v] * (float(up.max()) if up.size else 0.0)
        sets.append(OmegaSet(f"uav {scenario.uavs[v].id} home", rows, v, m[rows], e_site[rows, v],
                             1.0, float(a.E_v_max[v] - floor)))
    for w in range(V):
        rows = np.flatnonzero((a.home != w) & usable[:, w])
        sets.append(OmegaSet(f"uav {scenario.uavs[w].id} neighbour", rows, w, m[rows],
                             e_site[rows, w], 1.0, float(a.E_v_max[w])))
    rows = np.flatnonzero(usable[:, V])
    sets.append(OmegaSet("bs", rows, V, m[rows], np.zeros(rows.size), 1.0, np.inf))
    for s in sets:
        if s.cap_limit < 0 or s.energy_limit < 0:
            raise InfeasibleError(f"{s.name}: energy budget below hover floor", where=s.name)
    return sets


def placement_feasible(X, sets, tol=1e-6) -> bool:
    covered = np.zeros(X.shape, dtype=bool)
    for s in sets:
        covered[s.rows, s.col] = True
        if not s.contains(X[s.rows, s.col], tol):
            return False
    return not np.any(np.abs(X[~covered]) > tol)


class BlockFamily:
    """Sets updated as one ADMM block, flattened for vectorised projection."""

    def __init__(self, sets):
        self.sets = list(sets)
        sizes = [s.rows.size for s in self.sets]
        self.slices = []
        o = 0
        for n in sizes:
            self.slices.append(slice(o, o + n))
            o += n
        cat = lambda xs, dt=float: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt)  # noqa: E731
        self.rows = cat([s.rows for s in self.sets], int)
        self.cols = cat([np.full(s.rows.size, s.col) for s in self.sets], int)
        self.sid = cat([np.full(s.rows.size, i) for i, s in enumerate(self.sets)], int)
        self.cap_w = cat([s.cap_weight for s in self.sets])
        self.en_w = cat([s.energy_weight for s in self.sets])
        self.cap_lim = np.array([s.cap_limit for s in self.sets], dtype=float)
        self.en_lim = np.array([s.energy_limit for s in self.sets], dtype=float)

    def project(self, y):
        """Project the flat vector ``y`` set by set."""
        x = np.clip(y, 0.0, 1.0)
        n = len(self.sets)
        load = np.bincount(self.sid, weights=self.cap_w * x, minlength=n)
        energy = np.bincount(self.sid, weights=self.en_w * x, minlength=n)
        bad = (load > self.cap_lim) | (energy > self.en_lim)
        for i in np.flatnonzero(bad):
            sl = self.slices[i]
            x[sl] = self.sets[i].project(y[sl])
        return x

    def get(self, X):
        return X[self.rows, self.cols]

    def put(self, X, vals):
        X[self.rows, self.cols] = vals


# ---------------------------------------------------------------------------
# ADMM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmmOptions:
    rho: float = 10.0
    eps_pri: float = 1e-4
    eps_dual: float = 1e-5
    max_iter: int = 500
    cost_scale: float = 10.0
    inner_tol: float = 1e-9
    inner_max_sweeps: int = 500
    check_descent: bool = True


@dataclass(frozen=True)
class AdmmTraceRow:
    iteration: int
    objective: float
    primal_residual: float
    dual_residual: float
    consensus_residual: float
    aug_lagrangian: float
    block_increase: float = 0.0  # largest rise of the augmented Lagrangian over one block


@dataclass(frozen=True)
class PlacementSolution:
    relaxed: np.ndarray
    rounded: np.ndarray
    relaxed_objective: float
    rounded_objective: float
    iterations: int
    converged: bool
    lam: np.ndarray
    trace: tuple = field(repr=False)
    repair_log: tuple = ()


class DescentViolation(AssertionError):
    pass


def admm_costs(scenario, channel, alpha, beta, cost_scale=10.0):
    """Path latencies and the ADMM cost matrix.

    The ADMM works on the mean per-user latency times ``cost_scale``;
    unusable entries carry ``inf`` latency and zero ADMM cost.
    """
    pc = path_costs(scenario, channel, alpha, beta)
    P = pc.path
    usable = np.isfinite(P)
    cost = np.where(usable, P, 0.0) * (cost_scale / max(1, scenario.num_users))
    return pc, np.where(usable, P, np.inf), cost


def augmented_lagrangian(cost, X, lam, rho):
    r = X.sum(1) - 1.0
    return float((cost * X).sum() + lam @ r + 0.5 * rho * (r @ r))


@dataclass
class AdmmState:
    X: np.ndarray
    lam: np.ndarray
    rho: float
    k: int = 0


def _exact_single_entry(fam: BlockFamily, state: AdmmState, cost):
    """Exact minimiser for a block holding at most one entry per user."""
    X, lam, rho = state.X, state.lam, state.rho
    if fam.rows.size == 0:
        return
    cur = fam.get(X)
    others = X.sum(1)[fam.rows] - cur
    target = 1.0 - others - (cost[fam.rows, fam.cols] + lam[fam.rows]) / rho
    fam.put(X, fam.project(target))


def theta_update(fam: BlockFamily, state: AdmmState, cost):
    _exact_single_entry(fam, state, cost)


def phi_update(fam: BlockFamily, state: AdmmState, cost):
    _exact_single_entry(fam, state, cost)


class NeighbourBlock:
    """All neighbour sets packed for the compiled Gauss-Seidel sweep."""

    def __init__(self, sets):
        self.sets = [s for s in sets if s.rows.size]
        sizes = [s.rows.size for s in self.sets]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0)  # noqa: E731
        self.rows = cat([s.rows for s in self.sets]).astype(np.int64)
        self.cols = np.array([s.col for s in self.sets], dtype=np.int64)
        self.entry_cols = np.repeat(self.cols, sizes)
        self.cap_w = cat([s.cap_weight for s in self.sets]).astype(float)
        self.en_w = cat([s.energy_weight for s in self.sets]).astype(float)
        self.cap_lim = np.array([s.cap_limit for s in self.sets], dtype=float)
        self.en_lim = np.array([s.energy_limit for s in self.sets], dtype=float)


def gamma_update(block: NeighbourBlock, state: AdmmState, cost, tol=1e-9, max_sweeps=500):
    """Exact minimiser of the augmented Lagrangian over all neighbour blocks.

    The neighbour blocks only interact through the row sums, so sweeping
    the exact single-block minimiser over them (in UAV order) converges to
    the joint minimiser.  Returns the number of sweeps used.
    """
    if block.rows.size == 0:
        return 0
    shift = (cost[block.rows, block.entry_cols] + state.lam[block.rows]) / state.rho
    return int(_kernels.block_sweeps(state.X, block.rows, block.offsets, block.cols, block.cap_w,
                                     block.en_w, block.cap_lim, block.en_lim, shift, tol,
                                     max_sweeps, PROJ_TOL))


def dual_update(state: AdmmState) -> np.ndarray:
    """lambda <- lambda + rho (row sums - 1); returns the residual used."""
    r = state.X.sum(1) - 1.0
    state.lam = state.lam + state.rho * r
    return r


def families(sets, num_uavs):
    """Home family, the packed neighbour sets (UAV order) and the BS family."""
    V = num_uavs
    return BlockFamily(sets[:V]), NeighbourBlock(sets[V:2 * V]), BlockFamily(sets[2 * V:])


def solve(scenario: NetworkScenario, channel: ChannelState, alpha, beta,
          options: AdmmOptions | None = None, sets=None) -> PlacementSolution:
    """Relaxed placement by ADMM, then rounding.

    Costs are the mean per-user latency scaled by ``cost_scale``, all blocks
    and multipliers start at zero, and the run stops when both the change in
    row sums and the change in multipliers are below their tolerances.  On
    ``max_iter`` the last iterate is returned with ``converged=False``.
    """
    opt = options or AdmmOptions()
    alpha = np.asarray(alpha, dtype=float)
    if sets is None:
        sets = build_omega(scenario, channel, alpha, beta)
    pc, P, cost = admm_costs(scenario, channel, alpha, beta, opt.cost_scale)
    U, N = P.shape
    fam_theta, fam_gamma, fam_phi = families(sets, scenario.num_uavs)
    base = float(pc.t_loc.sum())
    state = AdmmState(X=np.zeros((U, N)), lam=np.zeros(U), rho=opt.rho)
    trace = []
    converged = False
    k = 0
    for k in range(1, opt.max_iter + 1):
        sum_old = state.X.sum(1)
        lam_old = state.lam.copy()
        al = [augmented_lagrangian(cost, state.X, state.lam, opt.rho)]
        theta_update(fam_theta, state, cost)
        al.append(augmented_lagrangian(cost, state.X, state.lam, opt.rho))
        gamma_update(fam_gamma, state, cost, opt.inner_tol, opt.inner_max_sweeps)
        al.append(augmented_lagrangian(cost, state.X, state.lam, opt.rho))
        phi_update(fam_phi, state, cost)
        al.append(augmented_lagrangian(cost, state.X, state.lam, opt.rho))
        rise = max(b - a for a, b in zip(al, al[1:]))
        if opt.check_descent:
            slack = 1e-9 * max(1.0, abs(al[0]))
            if rise > slack:
                raise DescentViolation(f"augmented Lagrangian increased at iteration {k}: {al}")
        r = dual_update(state)
        X = state.X
        pri = float(np.linalg.norm(X.sum(1) - sum_old))
        dual = float(np.linalg.norm(state.lam - lam_old))
        obj = base + float(np.where(X > 0, X * P, 0.0).sum())
        trace.append(AdmmTraceRow(k, obj, pri, dual, float(np.linalg.norm(r)), al[-1], float(rise)))
        if pri <= opt.eps_pri and dual <= opt.eps_dual:
            converged = True
            break
    X = state.X
    rounded, log = round_placements(X, sets, P)
    relaxed_obj = base + float(np.where(X > 0, X * P, 0.0).sum())
    rounded_obj = base + float(np.where(rounded > 0, P, 0.0).sum())
    return PlacementSolution(relaxed=X.copy(), rounded=rounded, relaxed_objective=relaxed_obj,
                             rounded_objective=rounded_obj, iterations=k, converged=converged,
                             lam=state.lam.copy(), trace=tuple(trace), repair_log=tuple(log))


# ---------------------------------------------------------------------------
# Rounding
# ---------------------------------------------------------------------------

def _set_index(shape, sets):
    idx = -np.ones(shape, dtype=int)
    cap = np.zeros(shape)
    en = np.zeros(shape)
    for i, s in enumerate(sets):
        idx[s.rows, s.col] = i
        cap[s.rows, s.col] = s.cap_weight
        en[s.rows, s.col] = s.energy_weight
    return idx, cap, en


def round_placements(X, sets, P, tol=1e-9):
    """One-hot placement from a relaxed one.

    Users are visited by decreasing largest relaxed entry; each takes its
    best remaining site (relaxed value, then latency, then site index) whose
    budgets still fit.
    """
    X = np.asarray(X, dtype=float)
    U, N = X.shape
    idx, cap, en = _set_index(X.shape, sets)
    cap_left = np.array([s.cap_limit for s in sets], dtype=float)
    en_left = np.array([s.energy_limit for s in sets], dtype=float)
    out = np.zeros_like(X)
    log = []
    best = np.where(idx >= 0, X, -np.inf).max(1)
    order = sorted(range(U), key=lambda u: (-best[u], u))
    for u in order:
        sites = [s for s in range(N) if idx[u, s] >= 0]
        sites.sort(key=lambda s: (-X[u, s], P[u, s], s))
        chosen = None
        for rank, s in enumerate(sites):
            i = idx[u, s]
            cap_ok = cap[u, s] <= cap_left[i] + tol
            en_ok = en[u, s] <= en_left[i] + tol * max(1.0, abs(en_left[i])) if np.isfinite(en_left[i]) else True
            if cap_ok and en_ok:
                chosen = s
                if rank > 0:
                    log.append((u, sites[0], s))
                break
        if chosen is None:
            raise InfeasibleError(f"no site can take the task of user index {u}", where=f"user {u}")
        i = idx[u, chosen]
        cap_left[i] -= cap[u, chosen]
        en_left[i] -= en[u, chosen]
        out[u, chosen] = 1.0
    return out, log
