"""Offload split: choose alpha with bandwidth and placement fixed.

With CPU shares frozen at the incoming iterate, each user's share of the
objective is affine in its own alpha and the energy budget is a single
linear inequality, so every user solves a one-variable LP in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .cost import DecisionSet, cpu_shares, forward_rates, objective_value
from .errors import InfeasibleError, InfeasibleRateError
from .scenario import NetworkScenario

ENERGY_TOL = 1e-9


@dataclass(frozen=True)
class UtodSolution:
    alpha: np.ndarray
    objective: float
    slope: np.ndarray
    at_lower: np.ndarray
    at_upper: np.ndarray
    energy_active: np.ndarray


def per_user_cost_slope(scenario: NetworkScenario, channel: ChannelState,
                        decisions: DecisionSet, shares=None, strict: bool = False) -> np.ndarray:
    """dZ/dalpha_u in s/bit, shares held fixed.

    A path with positive weight but zero uplink rate or zero CPU share gives
    slope ``+inf`` (offloading is impossible), or raises when ``strict``.
    """
    a = scenario.arrays
    X = decisions.place
    if shares is None:
        shares = cpu_shares(scenario, decisions.alpha)
    rate = channel.uplink_rate(decisions.beta, scenario)
    fwd_rate = forward_rates(scenario, channel)
    used = X > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        per_bit = np.where(used, 1.0 / fwd_rate + a.C[:, None] / shares, 0.0)
        up = np.where(used.any(1), X.sum(1) / rate, 0.0)
    slope = -a.C / a.f_loc + up + (X * per_bit).sum(1)
    bad = ~np.isfinite(slope)
    if strict and bad.any():
        raise InfeasibleRateError(f"zero rate or share on an active path for users {np.flatnonzero(bad).tolist()}",
                                  where="slope")
    return np.where(bad, np.inf, slope)


def energy_interval(scenario: NetworkScenario, channel: ChannelState, beta):
    """Per-user [lo, hi] of alpha meeting E_loc + E_up <= E_max, within [0, S]."""
    a = scenario.arrays
    e0 = a.kappa_u * a.f_loc**2 * a.C * a.S
    rate = channel.uplink_rate(beta, scenario)
    with np.errstate(divide="ignore"):
        up_per_bit = np.where(rate > 0, a.P_u / rate, np.inf)
    k = up_per_bit - a.kappa_u * a.f_loc**2 * a.C
    room = a.E_u_max - e0
    lo = np.zeros_like(a.S)
    hi = a.S.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = room / k
    pos, neg = k > 0, k < 0
    hi = np.where(pos, np.minimum(hi, np.where(np.isinf(k), 0.0, bound)), hi)
    lo = np.where(neg, np.maximum(lo, bound), lo)
    # k == 0: energy does not depend on alpha
    flat_bad = (k == 0) & (room < 0)
    lo = np.where(flat_bad, np.inf, lo)
    return lo, hi


def solve(scenario: NetworkScenario, channel: ChannelState, decisions: DecisionSet,
          shares=None) -> UtodSolution:
    if shares is None:
        shares = cpu_shares(scenario, decisions.alpha)
    slope = per_user_cost_slope(scenario, channel, decisions, shares)
    lo, hi = energy_interval(scenario, channel, decisions.beta)
    empty = lo > hi * (1 + ENERGY_TOL) + ENERGY_TOL
    if empty.any():
        ids = [scenario.users[i].id for i in np.flatnonzero(empty)]
        raise InfeasibleError(f"user energy budget infeasible for users {ids}", where=f"users {ids}")
    lo = np.minimum(lo, hi)
    prev = decisions.alpha
    alpha = np.where(slope < 0, hi, np.where(slope > 0, lo, np.clip(prev, lo, hi)))
    S = scenario.arrays.S
    obj = objective_value(scenario, channel, decisions.replace(alpha=alpha), frozen_shares=shares)
    energy_active = ((alpha == hi) & (hi < S)) | ((alpha == lo) & (lo > 0))
    return UtodSolution(alpha=alpha, objective=obj, slope=slope, at_lower=alpha <= 0,
                        at_upper=alpha >= S, energy_active=energy_active)
