"""Uplink bandwidth split per UAV by Lagrangian dual ascent.

Relaxing the per-user energy budget (multiplier zeta) and the per-UAV
bandwidth budget (multiplier xi) leaves a separable problem whose
minimiser is beta = sqrt(alpha (1 + zeta P) / (xi B Gamma)).  The duals are
moved by projected subgradient steps with a 1/sqrt(i) schedule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from scipy.optimize import brentq

from .channel import ChannelState
from .scenario import NetworkScenario


@dataclass(frozen=True)
class CraOptions:
    m: float = 0.1
    eps: float = 1e-5
    max_iter: int = 2000
    keep_trace: bool = True
    polish: bool = True  # finish with the exact per-UAV KKT point


@dataclass(frozen=True)
class CraDualState:
    zeta: np.ndarray  # per user
    xi: np.ndarray  # per UAV
    i: int = 1
    m: float = 0.1


@dataclass(frozen=True)
class CraSolution:
    beta: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    iterations: int
    converged: bool
    trace: np.ndarray = field(repr=False)  # (iterations + 1, U) beta per iteration


def beta_closed_form(alpha, zeta, xi, bandwidth, spectral_eff, tx_power):
    """Unclipped minimiser of alpha(1+zeta P)/(beta B Gamma) + xi beta."""
    alpha = np.asarray(alpha, dtype=float)
    num = alpha * (1.0 + np.asarray(zeta) * tx_power)
    den = np.asarray(xi, dtype=float) * bandwidth * np.asarray(spectral_eff, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.sqrt(num / den)
    return np.where(num > 0, b, 0.0)


def lagrangian_term(beta, alpha, zeta, xi, bandwidth, spectral_eff, tx_power):
    """Per-user beta-dependent part of the Lagrangian."""
    return alpha * (1.0 + zeta * tx_power) / (beta * bandwidth * spectral_eff) + xi * beta


def step_size(i: int, m: float) -> float:
    return m / np.sqrt(i)


def subgradient_step(state: CraDualState, energy_violation, bandwidth_violation,
                     zeta_scale=1.0, xi_scale=1.0) -> CraDualState:
    """One projected subgradient move of both multipliers.

    ``energy_violation`` is E_loc + E_up - E_max per user and
    ``bandwidth_violation`` is sum(beta) - 1 per UAV.  The scales multiply
    the base step so that both duals move on their natural units.
    """
    rho = step_size(state.i, state.m)
    zeta = np.maximum(0.0, state.zeta + rho * zeta_scale * np.asarray(energy_violation))
    xi = np.maximum(0.0, state.xi + rho * xi_scale * np.asarray(bandwidth_violation))
    return CraDualState(zeta=zeta, xi=xi, i=state.i + 1, m=state.m)


def _group_sum(values, home, n):
    return np.bincount(home, weights=values, minlength=n)


def energy_floor(alpha, room, bandwidth, spectral_eff, tx_power):
    """Smallest beta meeting P alpha / (beta B Gamma) <= room; inf if room <= 0."""
    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = tx_power * alpha / (bandwidth * spectral_eff * room)
    lo = np.where(room > 0, lo, np.inf)
    return np.where(alpha > 0, lo, 0.0)


def kkt_allocation(c, lower):
    """Exact minimiser of sum(c / beta) over sum(beta) <= 1, lower <= beta <= 1.

    ``c`` > 0 and ``lower`` in [0, 1] for the users of one UAV.  The optimum
    is beta = clip(sqrt(c / xi), lower, 1) with xi >= 0 chosen so the
    budget is met; returns (beta, xi).  If the floors alone exceed the
    budget they are scaled down to fit.
    """
    c = np.asarray(c, dtype=float)
    lower = np.minimum(np.asarray(lower, dtype=float), 1.0)
    if c.size == 0:
        return c.copy(), 0.0
    if c.size == 1:
        return np.ones(1), float(c[0])
    if lower.sum() >= 1.0:
        return lower / lower.sum(), np.inf
    share = lambda xi: np.clip(np.sqrt(c / xi), lower, 1.0)  # noqa: E731
    lo = float(c.min())
    hi = float((np.sqrt(c).sum() / (1.0 - lower.sum())) ** 2)
    if share(hi).sum() >= 1.0:
        return share(hi), hi
    xi = brentq(lambda t: share(np.exp(t)).sum() - 1.0, np.log(lo), np.log(hi), xtol=1e-14, rtol=1e-15)
    beta = share(np.exp(xi))
    return beta / max(1.0, beta.sum()), float(np.exp(xi))


def solve(scenario: NetworkScenario, channel: ChannelState, alpha,
          options: CraOptions | None = None, beta0=None) -> CraSolution:
    opt = options or CraOptions()
    a = scenario.arrays
    V = scenario.num_uavs
    home = a.home
    alpha = np.asarray(alpha, dtype=float)
    B = scenario.radio.a2g_bandwidth_per_uav
    gam = channel.spectral_eff
    active = alpha > 0
    e_loc = a.kappa_u * a.f_loc**2 * a.C * (a.S - alpha)

    # xi at which the sum constraint is tight with zeta = 0; a UAV with no
    # offloading user has a slack budget and keeps xi = 0
    root = np.sqrt(np.where(active, alpha / (B * gam), 0.0))
    xi0 = _group_sum(root, home, V) ** 2
    state = CraDualState(zeta=np.zeros_like(alpha), xi=xi0.copy(), i=1, m=opt.m)

    if beta0 is None:
        counts = np.bincount(home, minlength=V)
        beta = 1.0 / counts[home]
    else:
        beta = np.asarray(beta0, dtype=float).copy()
    trace = [beta.copy()] if opt.keep_trace else []
    converged = False
    it = 0
    for it in range(1, opt.max_iter + 1):
        xi_u = state.xi[home]
        raw = beta_closed_form(alpha, state.zeta, xi_u, B, gam, a.P_u)
        raw = np.where(active & (xi_u <= 0), 1.0, raw)
        new = np.where(active, np.clip(raw, 0.0, 1.0), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            e_up = np.where(active, a.P_u * alpha / (new * B * gam), 0.0)
        e_viol = (e_loc + e_up - a.E_u_max) / a.E_u_max
        b_viol = _group_sum(new, home, V) - 1.0
        state = subgradient_step(state, e_viol, b_viol, zeta_scale=1.0 / a.P_u, xi_scale=xi0)
        if opt.keep_trace:
            trace.append(new.copy())
        delta = np.max(np.abs(new - beta)) if new.size else 0.0
        beta = new
        if delta <= opt.eps:
            converged = True
            break
    total = _group_sum(beta, home, V)
    beta = beta / np.maximum(1.0, total)[home]
    zeta, xi = state.zeta, state.xi
    if opt.polish:
        beta, zeta, xi = _polish(alpha, a.E_u_max - e_loc, B, gam, a.P_u, home, V)
        if opt.keep_trace:
            trace.append(beta.copy())
    trace_arr = np.array(trace) if opt.keep_trace else np.empty((0, alpha.size))
    return CraSolution(beta=beta, zeta=zeta, xi=xi, iterations=it,
                       converged=converged, trace=trace_arr)


def _polish(alpha, room, B, gam, P, home, V):
    """Exact KKT point of the bandwidth problem, UAV by UAV, with its duals."""
    beta = np.zeros_like(alpha)
    xi = np.zeros(V)
    active = alpha > 0
    lower = energy_floor(alpha, room, B, gam, P)
    c = np.where(active, alpha / (B * gam), 0.0)
    for v in range(V):
        idx = np.flatnonzero((home == v) & active)
        beta[idx], xi[v] = kkt_allocation(c[idx], lower[idx])
    # zeta is the multiplier that lifts a user from sqrt(c / xi) to its floor
    with np.errstate(divide="ignore", invalid="ignore"):
        zeta = (beta**2 * xi[home] / c - 1.0) / P
    zeta = np.where(active & np.isfinite(zeta), np.maximum(zeta, 0.0), 0.0)
    return beta, zeta, xi
