import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skymec import cost
from skymec.channel import compute_channel
from skymec.cost import DecisionSet, home_placement, objective
from skymec.errors import InfeasibleRateError
from skymec.scenario import generate_random

from conftest import make_scenario, make_uav, make_user


def test_local_full_offload_is_free():
    t, e = cost.local_cost(8e8, 10.0, 3e6, 5e-27, 8e8)
    assert t == 0 and e == 0


def test_local_direct_value():
    t, e = cost.local_cost(8e8, 10.0, 3e6, 5e-27, 0.0)
    assert t == pytest.approx(8e9 / 3e6)
    assert e == pytest.approx(5e-27 * 9e12 * 8e9)


def test_upload_direct_value():
    t, e = cost.upload_cost(1e6, 2e6, 0.2)
    assert (float(t), float(e)) == pytest.approx((0.5, 0.1))
    assert cost.upload_cost(0.0, 0.0, 0.2) == (0.0, 0.0)


def test_upload_zero_rate_raises():
    with pytest.raises(InfeasibleRateError):
        cost.upload_cost(1.0, 0.0, 0.2)


@given(st.floats(0, 1e9), st.floats(1e3, 1e8), st.floats(0.01, 2.0))
def test_upload_energy_identity(alpha, rate, p):
    t, e = cost.upload_cost(alpha, rate, p)
    assert e == pytest.approx(p * t)


@pytest.mark.parametrize("alpha, cap, expected", [
    ([5.0], 2e6, [2e6]),
    ([2.0, 2.0], 2e6, [1e6, 1e6]),
    ([1.0, 3.0], 2e6, [0.5e6, 1.5e6]),
    ([0.0, 0.0], 2e6, [0.0, 0.0]),
])
def test_proportional_share(alpha, cap, expected):
    np.testing.assert_allclose(cost.proportional_cpu_share(alpha, cap), expected)


def test_compute_direct_value():
    t, e = cost.compute_cost(1e6, 10.0, 2e6, 5e-27)
    assert t == pytest.approx(5.0)
    assert e == pytest.approx(5e-27 * 4e12 * 1e7)
    with pytest.raises(InfeasibleRateError):
        cost.compute_cost(1e6, 10.0, 0.0, 5e-27)


@pytest.mark.parametrize("fn", [cost.forward_cost_a2a, cost.forward_cost_bs])
def test_forward_costs(fn):
    assert fn(np.zeros(3), np.ones(3), 1e6, 2.0) == (0.0, 0.0)
    t, e = fn(np.array([1.0, 0.0, 1.0]), np.array([3e6, 5e6, 1e6]), 1e6, 2.0)
    assert t == pytest.approx(4.0)
    assert e == pytest.approx(2.0 * t)
    with pytest.raises(InfeasibleRateError):
        fn(np.ones(1), np.ones(1), 0.0, 1.0)


def test_hover_cases():
    assert cost.hover(300.0, np.zeros(0), np.zeros((0, 3))) == (0.0, 0.0)
    t, e = cost.hover(300.0, np.array([2.0]), np.array([[5.0, 0.0, 0.0]]))
    assert t == 7.0 and e == 2100.0
    t, _ = cost.hover(1.0, np.array([1.0, 4.0]), np.array([[9.0, 3.0], [1.0, 2.0]]))
    assert t == 10.0


def _random_decisions(sc, rng):
    U, V = sc.num_users, sc.num_uavs
    a = sc.arrays
    X = rng.dirichlet(np.ones(V + 1), size=U)
    beta = rng.uniform(0.05, 1.0, U)
    beta /= np.maximum(1.0, np.bincount(a.home, beta, V))[a.home]
    return DecisionSet(rng.uniform(0.1, 1.0, U) * a.S, beta, X, a.home)


def test_pure_local_objective():
    sc = generate_random(3, 8, seed=1)
    ch = compute_channel(sc)
    a = sc.arrays
    d = DecisionSet(np.zeros(8), np.full(8, 0.1), home_placement(sc), a.home)
    z, bd = objective(sc, ch, d)
    assert z == pytest.approx(float((a.C * a.S / a.f_loc).sum()), rel=1e-12)
    assert np.all(bd.E_hov == 0) and np.all(bd.t_off == 0)


def test_objective_term_by_term(rng):
    sc = generate_random(3, 9, seed=5)
    ch = compute_channel(sc)
    a = sc.arrays
    d = _random_decisions(sc, rng)
    V = sc.num_uavs
    F = np.append(a.F, sc.bs.cpu_capacity)
    pool = np.bincount(a.home, d.alpha, V)
    total = 0.0
    for u in range(sc.num_users):
        v = a.home[u]
        al = d.alpha[u]
        t_up = al / (d.beta[u] * sc.radio.a2g_bandwidth_per_uav * ch.spectral_eff[u])
        z = a.C[u] * (a.S[u] - al) / a.f_loc[u] + d.place[u].sum() * t_up
        share = al / pool[v] * F
        for s in range(V + 1):
            fwd = 0.0 if s == v else al / (ch.backhaul_rate[v] if s == V else ch.a2a_rate[v, s])
            z += d.place[u, s] * (fwd + a.C[u] * al / share[s])
        total += z
    assert objective(sc, ch, d)[0] == pytest.approx(total, rel=1e-12)


@given(st.integers(0, 200))
def test_linearity_in_placement(seed):
    rng = np.random.default_rng(seed)
    sc = generate_random(3, 6, seed=seed % 7)
    ch = compute_channel(sc)
    d1 = _random_decisions(sc, rng)
    X2 = rng.dirichlet(np.ones(4), size=6)
    d2 = d1.replace(place=X2)
    mid = d1.replace(place=0.5 * (d1.place + X2))
    z1, z2, zm = (objective(sc, ch, d)[0] for d in (d1, d2, mid))
    assert zm == pytest.approx(0.5 * (z1 + z2), rel=1e-11)


@given(st.integers(0, 200))
def test_breakdown_consistency(seed):
    rng = np.random.default_rng(seed)
    sc = generate_random(3, 7, seed=seed % 5)
    ch = compute_channel(sc)
    d = _random_decisions(sc, rng)
    z, bd = objective(sc, ch, d)
    parts = bd.t_loc + bd.t_up + bd.t_comp_home + bd.t_a2a_com + bd.t_comp_neighbor + bd.t_bs_com + bd.t_comp_bs
    np.testing.assert_allclose(parts, bd.total, rtol=1e-9)
    assert z == pytest.approx(bd.total.sum(), rel=1e-12)
    assert z == pytest.approx(bd.Z_v.sum(), rel=1e-12)
    for f in dataclasses.fields(bd):
        val = getattr(bd, f.name)
        if isinstance(val, np.ndarray):
            assert np.all(val >= 0), f.name


@given(st.integers(0, 100))
def test_energy_identities(seed):
    rng = np.random.default_rng(seed)
    sc = generate_random(3, 6, seed=seed % 4)
    ch = compute_channel(sc)
    a = sc.arrays
    d = _random_decisions(sc, rng)
    _, bd = objective(sc, ch, d)
    pc = cost.path_costs(sc, ch, d.alpha, d.beta)
    np.testing.assert_allclose(pc.E_up, a.P_u * pc.t_up, rtol=1e-14)
    np.testing.assert_allclose(bd.E_fwd_a2a, a.P_v * bd.link_time_a2a.sum(1), rtol=1e-14)
    np.testing.assert_allclose(bd.E_fwd_bs, a.P_v0 * bd.link_time_bs, rtol=1e-14)
    np.testing.assert_allclose(bd.E_tot, bd.E_comp + bd.E_fwd_a2a + bd.E_fwd_bs + bd.E_hov, rtol=1e-14)


def test_more_bandwidth_never_slower(small, rng):
    sc, ch = small
    d = _random_decisions(sc, rng)
    t0 = cost.path_costs(sc, ch, d.alpha, d.beta).t_up
    t1 = cost.path_costs(sc, ch, d.alpha, d.beta * 1.5).t_up
    assert np.all(t1 <= t0)


def test_single_user_hover_time():
    sc = make_scenario([make_user(0, 0)], [make_uav(0)])
    ch = compute_channel(sc)
    d = DecisionSet(np.array([4e8]), np.array([1.0]), home_placement(sc), sc.arrays.home)
    _, bd = objective(sc, ch, d)
    assert bd.t_hov[0] == pytest.approx(bd.t_up[0] + bd.t_comp_home[0])
    assert bd.E_hov[0] == pytest.approx(sc.arrays.P_hov[0] * bd.t_hov[0])


def test_zero_rate_route_raises():
    sc = make_scenario([make_user(0, 0)], [make_uav(0, P0=0.0)])
    ch = compute_channel(sc)
    X = np.array([[0.0, 1.0]])
    with pytest.raises(InfeasibleRateError):
        objective(sc, ch, DecisionSet(np.array([1e6]), np.array([1.0]), X, sc.arrays.home))


def test_energy_report_local_only():
    sc = generate_random(2, 5, seed=0)
    ch = compute_channel(sc)
    d = DecisionSet(np.zeros(5), np.full(5, 0.2), home_placement(sc), sc.arrays.home)
    rep = cost.check_energy_budgets(sc, ch, d)
    assert rep.feasible
    assert np.all(rep.user_slack > 0)
    assert np.all(sc.arrays.E_v_max == 500e3)


def test_energy_report_flags_exact_users():
    users = [make_user(i, 0, E=1e9 if i != 1 else 1e-4) for i in range(3)]
    sc = make_scenario(users, [make_uav(0)])
    ch = compute_channel(sc)
    d = DecisionSet(np.zeros(3), np.full(3, 1 / 3), home_placement(sc), sc.arrays.home)
    rep = cost.check_energy_budgets(sc, ch, d)
    assert rep.violated_users.tolist() == [1]
    assert not rep.feasible


def test_decision_blocks_round_trip(small, rng):
    sc, _ = small
    d = _random_decisions(sc, rng)
    back = DecisionSet.from_blocks(d.alpha, d.beta, d.theta, d.gamma, d.phi, d.home)
    np.testing.assert_allclose(back.place, d.place)


def test_deadline_reported_not_enforced():
    sc = make_scenario([make_user(0, 0, T=1.0)], [make_uav(0)])
    ch = compute_channel(sc)
    d = DecisionSet(np.zeros(1), np.ones(1), home_placement(sc), sc.arrays.home)
    _, bd = objective(sc, ch, d)
    assert bd.deadline_violations == (0,)
