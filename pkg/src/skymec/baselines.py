"""Comparison schemes: placement baselines and simple bandwidth splits.

Every placement baseline takes the same (alpha, beta) as the proposed
method and works over the same feasible sets, so only the placement rule
differs.  Results are scored by the shared objective and energy report.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .channel import ChannelState
from .cost import (CostBreakdown, DecisionSet, EnergyReport, check_energy_budgets,
                   home_placement, objective)
from .errors import InfeasibleError
from .scenario import NetworkScenario
from .uad import _set_index, admm_costs, build_omega

SCHEMES = ("centralized", "greedy", "exhaustive", "non_collaboration")
DEFAULT_GUARD = 10**7


@dataclass(frozen=True)
class BaselineResult:
    scheme: str
    decisions: DecisionSet
    objective: float
    per_user_latency: np.ndarray
    bs_offloaded_bits: float
    runtime: float
    placement_feasible: bool
    energy: EnergyReport = field(repr=False)
    breakdown: CostBreakdown = field(repr=False)

    @property
    def bs_offloaded_bytes(self) -> float:
        return self.bs_offloaded_bits / 8.0

    @property
    def mean_latency(self) -> float:
        return float(self.per_user_latency.mean()) if self.per_user_latency.size else 0.0


def _result(scheme, scenario, channel, alpha, beta, X, sets, t0) -> BaselineResult:
    from .uad import placement_feasible
    a = scenario.arrays
    d = DecisionSet(np.asarray(alpha, float), np.asarray(beta, float), X, a.home)
    Z, bd = objective(scenario, channel, d)
    return BaselineResult(
        scheme=scheme, decisions=d, objective=Z, per_user_latency=bd.total,
        bs_offloaded_bits=float((X[:, -1] * d.alpha).sum()),
        runtime=time.perf_counter() - t0,
        placement_feasible=placement_feasible(X, sets),
        energy=check_energy_budgets(scenario, channel, d, bd), breakdown=bd)


# ---------------------------------------------------------------------------
# Centralized relaxation
# ---------------------------------------------------------------------------

def solve_relaxed_lp(sets, P):
    """Exact minimiser of sum(P * X) over the relaxed placement polytope.

    Returns the (U, N) relaxed matrix.  Entries outside every set are fixed
    at zero.
    """
    U, N = P.shape
    var_r = np.concatenate([s.rows for s in sets]).astype(int)
    var_c = np.concatenate([np.full(s.rows.size, s.col) for s in sets]).astype(int)
    nvar = var_r.size
    missing = np.setdiff1d(np.arange(U), var_r)
    if missing.size:
        raise InfeasibleError(f"users {missing.tolist()} have no usable site", where="centralized")
    rr, cc, vv, ub = [], [], [], []
    off = 0
    row = 0
    for s in sets:
        idx = np.arange(off, off + s.rows.size)
        rr.append(np.full(idx.size, row)), cc.append(idx), vv.append(s.cap_weight)
        ub.append(s.cap_limit)
        row += 1
        if np.isfinite(s.energy_limit):
            rr.append(np.full(idx.size, row)), cc.append(idx), vv.append(s.energy_weight)
            ub.append(s.energy_limit)
            row += 1
        off += s.rows.size
    A_ub = coo_matrix((np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))),
                      shape=(row, nvar)).tocsr()
    A_eq = coo_matrix((np.ones(nvar), (var_r, np.arange(nvar))), shape=(U, nvar)).tocsr()
    cost = P[var_r, var_c]
    res = linprog(cost, A_ub=A_ub, b_ub=np.array(ub), A_eq=A_eq, b_eq=np.ones(U),
                  bounds=(0.0, 1.0), method="highs")
    if res.status != 0:
        raise InfeasibleError(f"relaxed placement infeasible: {res.message}", where="centralized")
    X = np.zeros((U, N))
    X[var_r, var_c] = np.clip(res.x, 0.0, 1.0)
    return X


def centralized(scenario: NetworkScenario, channel: ChannelState, alpha, beta,
                sets=None) -> BaselineResult:
    t0 = time.perf_counter()
    if sets is None:
        sets = build_omega(scenario, channel, alpha, beta)
    _, P, _ = admm_costs(scenario, channel, alpha, beta)
    X = solve_relaxed_lp(sets, P)
    return _result("centralized", scenario, channel, alpha, beta, X, sets, t0)


# ---------------------------------------------------------------------------
# Exhaustive enumeration
# ---------------------------------------------------------------------------

def enumeration_count(sets, shape) -> int:
    idx, _, _ = _set_index(shape, sets)
    count = 1
    for n in (idx >= 0).sum(1):
        count *= int(n)
    return count


def exhaustive(scenario: NetworkScenario, channel: ChannelState, alpha, beta,
               size_guard: int = DEFAULT_GUARD, sets=None, chunk: int = 1 << 17) -> BaselineResult:
    """Best one-hot placement by full enumeration.

    Assignments are enumerated in lexicographic order of the per-user site
    choice; the first minimum wins, so ties go to the smallest assignment.
    """
    t0 = time.perf_counter()
    if sets is None:
        sets = build_omega(scenario, channel, alpha, beta)
    _, P, _ = admm_costs(scenario, channel, alpha, beta)
    U, N = P.shape
    idx, cap, en = _set_index(P.shape, sets)
    options = [np.flatnonzero(idx[u] >= 0) for u in range(U)]
    radix = np.array([o.size for o in options], dtype=np.int64)
    if np.any(radix == 0):
        raise InfeasibleError("a user has no usable site", where="exhaustive")
    total = enumeration_count(sets, P.shape)
    if total > size_guard:
        raise ValueError(f"exhaustive search needs {total} assignments, guard is {size_guard}")
    cap_lim = np.array([s.cap_limit for s in sets])
    en_lim = np.array([s.energy_limit for s in sets])
    # per user, per option: set id, weights and cost
    o_sid = [idx[u, options[u]] for u in range(U)]
    o_cap = [cap[u, options[u]] for u in range(U)]
    o_en = [en[u, options[u]] for u in range(U)]
    o_cost = [P[u, options[u]] for u in range(U)]
    place = np.ones(U, dtype=np.int64)
    for u in range(U - 2, -1, -1):
        place[u] = place[u + 1] * radix[u + 1]
    best_val, best_code = np.inf, -1
    tol = 1e-9
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        n = codes.size
        val = np.zeros(n)
        load = np.zeros((n, len(sets)))
        energy = np.zeros((n, len(sets)))
        ar = np.arange(n)
        for u in range(U):
            k = (codes // place[u]) % radix[u]
            val += o_cost[u][k]
            sid = o_sid[u][k]
            load[ar, sid] += o_cap[u][k]
            energy[ar, sid] += o_en[u][k]
        ok = np.all(load <= cap_lim + tol, axis=1)
        ok &= np.all(energy <= en_lim + tol * np.maximum(1.0, np.abs(en_lim)), axis=1)
        if not ok.any():
            continue
        masked = np.where(ok, val, np.inf)
        j = int(np.argmin(masked))
        if masked[j] < best_val:
            best_val, best_code = float(masked[j]), int(codes[j])
    if best_code < 0:
        raise InfeasibleError("no one-hot placement satisfies the site budgets", where="exhaustive")
    X = np.zeros((U, N))
    for u in range(U):
        X[u, options[u][(best_code // place[u]) % radix[u]]] = 1.0
    return _result("exhaustive", scenario, channel, alpha, beta, X, sets, t0)


# ---------------------------------------------------------------------------
# Rule-based placements
# ---------------------------------------------------------------------------

class _Budgets:
    """Remaining capacity and energy of every set, for one-hot filling."""

    def __init__(self, sets, shape):
        self.idx, self.cap, self.en = _set_index(shape, sets)
        self.cap_left = np.array([s.cap_limit for s in sets], dtype=float)
        self.en_left = np.array([s.energy_limit for s in sets], dtype=float)

    def fits(self, u, s, tol=1e-9) -> bool:
        i = self.idx[u, s]
        if i < 0:
            return False
        if self.cap[u, s] > self.cap_left[i] + tol:
            return False
        lim = self.en_left[i]
        return not np.isfinite(lim) or self.en[u, s] <= lim + tol * max(1.0, abs(lim))

    def take(self, u, s):
        i = self.idx[u, s]
        self.cap_left[i] -= self.cap[u, s]
        self.en_left[i] -= self.en[u, s]


def greedy(scenario: NetworkScenario, channel: ChannelState, alpha, beta, sets=None) -> BaselineResult:
    """Home first; overflow to neighbours by decreasing link rate, then the BS."""
    t0 = time.perf_counter()
    if sets is None:
        sets = build_omega(scenario, channel, alpha, beta)
    a = scenario.arrays
    U, V = scenario.num_users, scenario.num_uavs
    bud = _Budgets(sets, (U, V + 1))
    X = np.zeros((U, V + 1))
    for v in range(V):
        rate = channel.a2a_rate[v].copy()
        nbrs = sorted((w for w in range(V) if w != v), key=lambda w: (-rate[w], w))
        for u in a.members[v]:
            for s in [v, *nbrs, V]:
                if bud.fits(u, s):
                    bud.take(u, s)
                    X[u, s] = 1.0
                    break
            else:
                raise InfeasibleError(f"greedy cannot place user index {u}", where=f"user {u}")
    return _result("greedy", scenario, channel, alpha, beta, X, sets, t0)


def non_collaboration(scenario: NetworkScenario, channel: ChannelState, alpha, beta,
                      sets=None) -> BaselineResult:
    """Home up to its budgets, in ascending CPU demand; everything else to the BS."""
    t0 = time.perf_counter()
    if sets is None:
        sets = build_omega(scenario, channel, alpha, beta)
    a = scenario.arrays
    U, V = scenario.num_users, scenario.num_uavs
    alpha = np.asarray(alpha, float)
    bud = _Budgets(sets, (U, V + 1))
    X = np.zeros((U, V + 1))
    demand = a.C * alpha
    for v in range(V):
        for u in sorted(a.members[v], key=lambda q: (demand[q], q)):
            for s in (v, V):
                if bud.fits(u, s):
                    bud.take(u, s)
                    X[u, s] = 1.0
                    break
            else:
                raise InfeasibleError(f"no home or BS room for user index {u}", where=f"user {u}")
    return _result("non_collaboration", scenario, channel, alpha, beta, X, sets, t0)


def all_home(scenario: NetworkScenario, channel: ChannelState, alpha, beta, sets=None) -> BaselineResult:
    t0 = time.perf_counter()
    if sets is None:
        sets = build_omega(scenario, channel, alpha, beta)
    return _result("all_home", scenario, channel, alpha, beta, home_placement(scenario), sets, t0)


PLACEMENT_SCHEMES = {
    "centralized": centralized,
    "greedy": greedy,
    "exhaustive": exhaustive,
    "non_collaboration": non_collaboration,
}


def run_scheme(name, scenario, channel, alpha, beta, sets=None, **kw) -> BaselineResult:
    try:
        fn = PLACEMENT_SCHEMES[name]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(PLACEMENT_SCHEMES)}") from None
    return fn(scenario, channel, alpha, beta, sets=sets, **kw)


# ---------------------------------------------------------------------------
# Bandwidth splits
# ---------------------------------------------------------------------------

def bandwidth_uniform(scenario: NetworkScenario) -> np.ndarray:
    a = scenario.arrays
    counts = np.bincount(a.home, minlength=scenario.num_uavs)
    return 1.0 / counts[a.home]


def bandwidth_proportional(scenario: NetworkScenario, alpha) -> np.ndarray:
    """beta_u = alpha_u / (offloaded bits of the home pool); zero for idle pools."""
    a = scenario.arrays
    alpha = np.asarray(alpha, dtype=float)
    pool = np.bincount(a.home, weights=alpha, minlength=scenario.num_uavs)[a.home]
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(pool > 0, alpha / pool, 0.0)
