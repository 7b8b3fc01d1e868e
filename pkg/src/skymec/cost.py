"""Latency and energy accounting for a (scenario, channel, decisions) triple.

Placement is stored as one matrix ``X`` of shape (users, UAVs + 1).  For a
user with home UAV ``v`` the entry ``X[u, v]`` is the serve-at-home
indicator, ``X[u, w]`` (w != v) forwards to neighbour ``w`` and the last
column forwards to the base station.  Per-entry path latencies are linear
coefficients, so the objective is linear in ``X`` for fixed (alpha, beta).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelState
from .errors import InfeasibleRateError
from .scenario import NetworkScenario


def _ratio(num, den, what="resource"):
    """num/den with 0/0 -> 0; positive load over zero capacity raises."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    bad = (num > 0) & ~(den > 0)
    if np.any(bad):
        raise InfeasibleRateError(f"positive load on a zero-capacity {what}", where=what)
    out = np.zeros(np.broadcast(num, den).shape)
    np.divide(num, den, out=out, where=(num > 0) | (den > 0))
    return out


# ---------------------------------------------------------------------------
# Elementary terms
# ---------------------------------------------------------------------------

def local_cost(S, C, f_loc, kappa, alpha):
    """(t_loc, E_loc) for the part of the task kept on the device."""
    rest = np.asarray(S, dtype=float) - np.asarray(alpha, dtype=float)
    return C * rest / f_loc, kappa * f_loc**2 * C * rest


def upload_cost(alpha, rate, tx_power):
    t = _ratio(alpha, rate, "uplink")
    return t, tx_power * t


def proportional_cpu_share(alpha, capacity):
    """Split ``capacity`` over a serving set in proportion to offloaded bits."""
    alpha = np.asarray(alpha, dtype=float)
    total = alpha.sum()
    if total <= 0:
        return np.zeros_like(alpha)
    return alpha / total * capacity


def compute_cost(alpha, C, share, kappa):
    t = _ratio(np.asarray(alpha) * C, share, "CPU share")
    return t, kappa * np.asarray(share, dtype=float) ** 2 * C * alpha


def forward_cost_a2a(gamma_col, alpha, rate, tx_power):
    """Link occupancy time and energy for the bits UAV v forwards to w."""
    t = _ratio(float(np.dot(gamma_col, alpha)), rate, "A2A link")
    return float(t), float(tx_power * t)


def forward_cost_bs(phi_col, alpha, rate, tx_power):
    t = _ratio(float(np.dot(phi_col, alpha)), rate, "backhaul link")
    return float(t), float(tx_power * t)


def hover(hover_power, t_up, branches):
    """Hover time and energy of one UAV.

    ``branches`` is (users, k) with already-gated branch latencies.
    """
    t_up = np.asarray(t_up, dtype=float)
    if t_up.size == 0:
        return 0.0, 0.0
    inner = np.max(branches, axis=1) if np.size(branches) else np.zeros_like(t_up)
    t = float(np.max(t_up + inner))
    return t, hover_power * t


# ---------------------------------------------------------------------------
# Decisions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecisionSet:
    alpha: np.ndarray
    beta: np.ndarray
    place: np.ndarray  # (U, V+1)
    home: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return self.place[np.arange(len(self.home)), self.home]

    @property
    def gamma(self) -> np.ndarray:
        g = self.place[:, :-1].copy()
        g[np.arange(len(self.home)), self.home] = 0.0
        return g

    @property
    def phi(self) -> np.ndarray:
        return self.place[:, -1]

    @classmethod
    def from_blocks(cls, alpha, beta, theta, gamma, phi, home):
        home = np.asarray(home, dtype=int)
        gamma = np.array(gamma, dtype=float)
        rows = np.arange(len(home))
        gamma[rows, home] = theta
        place = np.column_stack([gamma, phi])
        return cls(np.asarray(alpha, float), np.asarray(beta, float), place, home)

    def replace(self, **kw) -> "DecisionSet":
        d = dict(alpha=self.alpha, beta=self.beta, place=self.place, home=self.home)
        d.update(kw)
        return DecisionSet(**d)


def home_placement(scenario: NetworkScenario) -> np.ndarray:
    a = scenario.arrays
    X = np.zeros((scenario.num_users, scenario.num_uavs + 1))
    X[np.arange(scenario.num_users), a.home] = 1.0
    return X


# ---------------------------------------------------------------------------
# Site model
# ---------------------------------------------------------------------------

def home_load(scenario: NetworkScenario, alpha) -> np.ndarray:
    """Total offloaded bits of each user's home pool, per user."""
    a = scenario.arrays
    per_uav = np.bincount(a.home, weights=alpha, minlength=scenario.num_uavs)
    return per_uav[a.home]


def masses(scenario: NetworkScenario, alpha) -> np.ndarray:
    """Fraction of a site's CPU each user claims, alpha_u / A_home(u)."""
    return _ratio(np.asarray(alpha, dtype=float), home_load(scenario, alpha), "home pool")


def site_capacity(scenario: NetworkScenario) -> np.ndarray:
    a = scenario.arrays
    return np.append(a.F, scenario.bs.cpu_capacity)


def site_kappa(scenario: NetworkScenario) -> np.ndarray:
    a = scenario.arrays
    return np.append(a.kappa_v, scenario.bs.chip_constant)


def cpu_shares(scenario: NetworkScenario, alpha) -> np.ndarray:
    """(U, V+1) CPU share every site would grant each user."""
    return masses(scenario, alpha)[:, None] * site_capacity(scenario)[None, :]


def forward_rates(scenario: NetworkScenario, channel: ChannelState) -> np.ndarray:
    """(U, V+1) rate of the forward hop; ``inf`` for the home column."""
    a = scenario.arrays
    return np.column_stack([channel.a2a_rate[a.home], channel.backhaul_rate[a.home]])


@dataclass(frozen=True)
class PathCosts:
    t_loc: np.ndarray
    E_loc: np.ndarray
    rate: np.ndarray
    t_up: np.ndarray
    E_up: np.ndarray
    shares: np.ndarray
    fwd: np.ndarray
    comp: np.ndarray
    comp_energy: np.ndarray

    @property
    def path(self) -> np.ndarray:
        """(U, V+1) latency of the offloaded part if served at each site."""
        return self.t_up[:, None] + self.fwd + self.comp


def path_costs(scenario, channel, alpha, beta, frozen_shares=None) -> PathCosts:
    a = scenario.arrays
    alpha = np.asarray(alpha, dtype=float)
    t_loc, E_loc = local_cost(a.S, a.C, a.f_loc, a.kappa_u, alpha)
    rate = channel.uplink_rate(beta, scenario)
    t_up, E_up = upload_cost(alpha, rate, a.P_u)
    shares = cpu_shares(scenario, alpha) if frozen_shares is None else frozen_shares
    load = alpha[:, None] * np.ones(shares.shape)
    rates = forward_rates(scenario, channel)
    with np.errstate(divide="ignore", invalid="ignore"):
        fwd = np.where(load > 0, load / rates, 0.0)
        comp = np.where(load > 0, a.C[:, None] * load / shares, 0.0)
    comp_energy = site_kappa(scenario)[None, :] * shares**2 * a.C[:, None] * load
    return PathCosts(t_loc, E_loc, rate, t_up, E_up, shares, fwd, comp, comp_energy)


def _check_routes(pc: PathCosts, X) -> None:
    used = X > 0
    if np.any(used & ~np.isfinite(pc.path)):
        raise InfeasibleRateError("placement routes load over a zero-rate link or zero CPU share",
                                  where="route")


# ---------------------------------------------------------------------------
# Objective and breakdown
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostBreakdown:
    t_loc: np.ndarray
    t_up: np.ndarray
    t_comp_home: np.ndarray
    t_a2a_com: np.ndarray
    t_comp_neighbor: np.ndarray
    t_bs_com: np.ndarray
    t_comp_bs: np.ndarray
    t_off: np.ndarray
    total: np.ndarray
    E_loc: np.ndarray
    E_up: np.ndarray
    E_comp: np.ndarray
    E_comp_neighbor: np.ndarray
    E_fwd_a2a: np.ndarray
    E_fwd_bs: np.ndarray
    E_hov: np.ndarray
    E_tot: np.ndarray
    t_hov: np.ndarray
    t_hov_neighbor: np.ndarray
    link_time_a2a: np.ndarray  # (V, V) aggregate forward occupancy
    link_time_bs: np.ndarray
    Z_v: np.ndarray
    deadline_violations: tuple[int, ...] = field(default_factory=tuple)

    @property
    def Z(self) -> float:
        return float(self.Z_v.sum())


def objective_value(scenario, channel, decisions: DecisionSet, frozen_shares=None) -> float:
    pc = path_costs(scenario, channel, decisions.alpha, decisions.beta, frozen_shares)
    X = decisions.place
    _check_routes(pc, X)
    return float(pc.t_loc.sum() + np.where(X > 0, X * pc.path, 0.0).sum())


def objective(scenario: NetworkScenario, channel: ChannelState, decisions: DecisionSet,
              frozen_shares=None, gate_tol: float = 1e-9):
    """Total latency Z and the full per-user / per-UAV breakdown."""
    a = scenario.arrays
    U, V = scenario.num_users, scenario.num_uavs
    pc = path_costs(scenario, channel, decisions.alpha, decisions.beta, frozen_shares)
    X = decisions.place
    _check_routes(pc, X)
    rows = np.arange(U)
    home = a.home
    Xs = np.where(X > 0, X, 0.0)
    w_fwd = Xs * np.where(X > 0, pc.fwd, 0.0)
    w_comp = Xs * np.where(X > 0, pc.comp, 0.0)
    nb = np.ones((U, V + 1), dtype=bool)
    nb[rows, home] = False
    nb[:, V] = False

    t_up_w = Xs.sum(1) * pc.t_up
    t_comp_home = w_comp[rows, home]
    t_a2a = np.where(nb, w_fwd, 0).sum(1)
    t_comp_nb = np.where(nb, w_comp, 0).sum(1)
    t_bs = w_fwd[:, V]
    t_comp_bs = w_comp[:, V]
    t_off = t_up_w + t_comp_home + t_a2a + t_comp_nb + t_bs + t_comp_bs
    total = pc.t_loc + t_off
    Z_v = np.bincount(home, weights=total, minlength=V)

    E_site = Xs * pc.comp_energy
    E_comp = np.bincount(home, weights=E_site[rows, home], minlength=V)
    E_comp_nb = np.where(nb, E_site, 0)[:, :V].sum(0)

    link_a2a = np.zeros((V, V))
    link_bs = np.zeros(V)
    for v in range(V):
        mine = home == v
        for w in range(V):
            if w != v:
                link_a2a[v, w] = forward_cost_a2a(Xs[mine, w], decisions.alpha[mine],
                                                  channel.a2a_rate[v, w], a.P_v[v])[0]
        link_bs[v] = forward_cost_bs(Xs[mine, V], decisions.alpha[mine],
                                     channel.backhaul_rate[v], a.P_v0[v])[0]
    E_fwd_a2a = a.P_v * link_a2a.sum(1)
    E_fwd_bs = a.P_v0 * link_bs

    gate = X > gate_tol
    branch = np.where(gate, pc.fwd + pc.comp, 0.0)
    t_hov = np.zeros(V)
    t_hov_nb = np.zeros(V)
    for v in range(V):
        mine = np.flatnonzero(home == v)
        up = np.where(decisions.alpha[mine] > 0, pc.t_up[mine], 0.0)
        t_hov[v] = hover(a.P_hov[v], up, branch[mine])[0]
        fwd_in = nb[:, v] & gate[:, v]
        if fwd_in.any():
            t_hov_nb[v] = float(pc.comp[fwd_in, v].max())
    E_hov = a.P_hov * t_hov
    E_tot = E_comp + E_fwd_a2a + E_fwd_bs + E_hov
    late = tuple(int(scenario.users[i].id) for i in np.flatnonzero(total > a.T))
    bd = CostBreakdown(
        t_loc=pc.t_loc, t_up=t_up_w, t_comp_home=t_comp_home, t_a2a_com=t_a2a,
        t_comp_neighbor=t_comp_nb, t_bs_com=t_bs, t_comp_bs=t_comp_bs, t_off=t_off,
        total=total, E_loc=pc.E_loc, E_up=pc.E_up, E_comp=E_comp,
        E_comp_neighbor=E_comp_nb, E_fwd_a2a=E_fwd_a2a, E_fwd_bs=E_fwd_bs,
        E_hov=E_hov, E_tot=E_tot, t_hov=t_hov, t_hov_neighbor=t_hov_nb,
        link_time_a2a=link_a2a, link_time_bs=link_bs, Z_v=Z_v,
        deadline_violations=late,
    )
    return bd.Z, bd


@dataclass(frozen=True)
class EnergyReport:
    user_slack: np.ndarray
    uav_slack: np.ndarray
    neighbor_slack: np.ndarray

    @property
    def violated_users(self) -> np.ndarray:
        return np.flatnonzero(self.user_slack < 0)

    @property
    def violated_uavs(self) -> np.ndarray:
        return np.flatnonzero((self.uav_slack < 0) | (self.neighbor_slack < 0))

    @property
    def feasible(self) -> bool:
        return self.violated_users.size == 0 and self.violated_uavs.size == 0


def check_energy_budgets(scenario, channel, decisions, breakdown: CostBreakdown | None = None,
                         tol: float = 1e-9) -> EnergyReport:
    a = scenario.arrays
    if breakdown is None:
        breakdown = objective(scenario, channel, decisions)[1]
    user = a.E_u_max - (breakdown.E_loc + breakdown.E_up)
    uav = a.E_v_max - breakdown.E_tot
    nbr = a.E_v_max - (breakdown.E_comp_neighbor + a.P_hov * breakdown.t_hov_neighbor)
    user = np.where(np.abs(user) <= tol * a.E_u_max, 0.0, user)
    uav = np.where(np.abs(uav) <= tol * a.E_v_max, 0.0, uav)
    nbr = np.where(np.abs(nbr) <= tol * a.E_v_max, 0.0, nbr)
    return EnergyReport(user_slack=user, uav_slack=uav, neighbor_slack=nbr)
