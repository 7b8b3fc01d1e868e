import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from skymec import cra
from skymec.channel import compute_channel
from skymec.cost import DecisionSet, home_placement, objective
from skymec.scenario import generate_random

from conftest import golden_section, make_scenario, make_uav, make_user

B = 3e6


def test_zero_alpha_gets_zero():
    assert cra.beta_closed_form(0.0, 0.3, 2.0, B, 5.0, 0.2) == 0.0


def test_square_root_scaling():
    b1 = cra.beta_closed_form(1e8, 0.5, 40.0, B, 8.0, 0.2)
    b4 = cra.beta_closed_form(4e8, 0.5, 40.0, B, 8.0, 0.2)
    assert b4 == pytest.approx(2 * b1, rel=1e-14)


@given(st.floats(1e6, 4e9), st.floats(0, 5), st.floats(1, 1e3), st.floats(1, 30))
def test_closed_form_is_stationary(alpha, zeta, xi, gam):
    b = float(cra.beta_closed_form(alpha, zeta, xi, B, gam, 0.2))
    f = lambda x: cra.lagrangian_term(x, alpha, zeta, xi, B, gam, 0.2)  # noqa: E731
    assert f(b) <= min(f(b * (1 + 1e-6)), f(b * (1 - 1e-6)))


def test_closed_form_vs_golden_section(rng):
    for _ in range(20):
        alpha, zeta, xi, gam = rng.uniform(1e7, 4e9), rng.uniform(0, 3), rng.uniform(10, 500), rng.uniform(2, 25)
        K = alpha * (1 + zeta * 0.2) / (B * gam)
        g = lambda x: (np.sqrt(K / x) - np.sqrt(xi * x)) ** 2  # noqa: E731
        b = float(cra.beta_closed_form(alpha, zeta, xi, B, gam, 0.2))
        ref = golden_section(g, 1e-9, 10.0 * b)
        assert abs(ref - b) <= 1e-8 * max(1.0, b)


@pytest.mark.parametrize("i, expected", [(1, 0.1), (4, 0.05), (100, 0.01)])
def test_step_schedule(i, expected):
    assert cra.step_size(i, 0.1) == pytest.approx(expected)


def test_slack_duals_stay_zero():
    st0 = cra.CraDualState(np.zeros(3), np.zeros(2))
    st1 = cra.subgradient_step(st0, -np.ones(3), -np.ones(2))
    assert np.all(st1.zeta == 0) and np.all(st1.xi == 0)
    assert st1.i == 2


def test_oversubscribed_bandwidth_raises_xi():
    st0 = cra.CraDualState(np.zeros(1), np.array([1.0, 1.0]))
    st1 = cra.subgradient_step(st0, np.zeros(1), np.array([0.2, -0.1]))
    assert st1.xi[0] > 1.0


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=6), st.lists(st.floats(-2, 2), min_size=1, max_size=3),
       st.integers(1, 1000))
def test_duals_stay_nonnegative(e, b, i):
    st0 = cra.CraDualState(np.abs(np.array(e)) * 0.1, np.abs(np.array(b)), i=i)
    st1 = cra.subgradient_step(st0, e, b)
    assert np.all(st1.zeta >= 0) and np.all(st1.xi >= 0)


def test_lone_user_takes_whole_band():
    sc = make_scenario([make_user(0, 0), make_user(1, 1, pos=(300.0, 300.0))],
                       [make_uav(0), make_uav(1, pos=(300.0, 300.0))])
    ch = compute_channel(sc)
    sol = cra.solve(sc, ch, sc.arrays.S)
    np.testing.assert_allclose(sol.beta, [1.0, 1.0])


def test_best_user_gets_highest_rate():
    pos = [(150.0, 150.0), (140.0, 60.0), (210.0, 90.0), (250.0, 250.0), (90.0, 230.0)]
    sizes = [4e9, 1e9, 1.5e9, 3.5e9, 2e9]
    users = [make_user(i, 0, pos=p, S=s) for i, (p, s) in enumerate(zip(pos, sizes))]
    sc = make_scenario(users, [make_uav(0, pos=(150.0, 150.0))])
    ch = compute_channel(sc)
    sol = cra.solve(sc, ch, sc.arrays.S)
    rate = ch.uplink_rate(sol.beta, sc)
    assert np.argmax(ch.gain) == 0 and np.argmax(sc.arrays.S) == 0
    assert np.argmax(rate) == 0
    assert sol.trace.shape[1] == 5 and sol.converged


def _primal_oracle(sc, ch, alpha):
    a = sc.arrays
    room = a.E_u_max - a.kappa_u * a.f_loc**2 * a.C * (a.S - alpha)
    g = ch.spectral_eff
    f = lambda b: float((alpha / (b * B * g)).sum())  # noqa: E731
    cons = [{"type": "ineq", "fun": lambda b: 1.0 - b.sum()},
            {"type": "ineq", "fun": lambda b: (room - a.P_u * alpha / (b * B * g)) / room}]
    x0 = np.full(alpha.size, 1.0 / alpha.size)
    res = minimize(f, x0, method="SLSQP", bounds=[(1e-6, 1.0)] * alpha.size, constraints=cons,
                   options={"ftol": 1e-15, "maxiter": 2000})
    return res.x


@pytest.mark.filterwarnings("ignore:Values in x were outside bounds")
@pytest.mark.parametrize("tight", [None, 0.9, 0.7])
def test_matches_primal_solve(tight):
    pos = [(60.0, 60.0), (120.0, 150.0), (200.0, 90.0), (250.0, 250.0)]
    users = [make_user(i, 0, pos=p) for i, p in enumerate(pos)]
    sc = make_scenario(users, [make_uav(0, pos=(150.0, 150.0))])
    ch = compute_channel(sc)
    alpha = sc.arrays.S.copy()
    if tight is not None:
        free = cra.solve(sc, ch, alpha).beta
        e_up = 0.2 * alpha[0] / (free[0] * B * ch.spectral_eff[0])
        users[0] = make_user(0, 0, pos=pos[0], E=tight * e_up)
        sc = make_scenario(users, [make_uav(0, pos=(150.0, 150.0))])
    sol = cra.solve(sc, ch, alpha)
    np.testing.assert_allclose(sol.beta, _primal_oracle(sc, ch, alpha), atol=1e-4)
    a = sc.arrays
    assert np.all(a.P_u * alpha / (sol.beta * B * ch.spectral_eff) <= a.E_u_max * (1 + 1e-9))
    if tight is not None:
        assert sol.zeta[0] > 0


@given(st.integers(0, 300))
def test_solution_invariants(seed):
    sc = generate_random(3, 9, seed=seed)
    ch = compute_channel(sc)
    rng = np.random.default_rng(seed)
    alpha = sc.arrays.S * rng.uniform(0, 1, 9) * (rng.uniform(size=9) > 0.2)
    sol = cra.solve(sc, ch, alpha)
    total = np.bincount(sc.arrays.home, sol.beta, 3)
    assert np.all(total <= 1 + 1e-6)
    assert np.all((sol.beta >= 0) & (sol.beta <= 1))
    assert np.all(sol.beta[alpha == 0] == 0)
    assert np.all(sol.zeta >= 0) and np.all(sol.xi >= 0)
    assert np.all(np.abs(sol.xi * (total - 1)) <= 1e-4)


@given(st.integers(0, 300), st.floats(0.1, 10))
def test_normalised_shares_scale_free(seed, k):
    sc = generate_random(3, 9, seed=seed)
    ch = compute_channel(sc)
    a = sc.arrays
    alpha = a.S.copy()
    scaled = np.where(a.home == 0, k * alpha, alpha)
    norm = lambda b: b / np.bincount(a.home, b, 3)[a.home]  # noqa: E731
    b1 = cra.solve(sc, ch, alpha).beta
    b2 = cra.solve(sc, ch, scaled).beta
    np.testing.assert_allclose(norm(b1), norm(b2), atol=1e-9)


@given(st.integers(0, 100))
def test_objective_convex_along_lines(seed):
    sc = generate_random(2, 6, seed=seed)
    ch = compute_channel(sc)
    rng = np.random.default_rng(seed)
    a = sc.arrays
    beta0 = rng.uniform(0.2, 0.6, 6)
    step = rng.uniform(-0.1, 0.1, 6)
    z = lambda b: objective(sc, ch, DecisionSet(a.S, b, home_placement(sc), a.home))[0]  # noqa: E731
    for t in (0.5, 1.0):
        assert z(beta0 + t * step) + z(beta0 - t * step) - 2 * z(beta0) >= -1e-9 * z(beta0)


def test_subgradient_only_mode_respects_budget(small):
    sc, ch = small
    sol = cra.solve(sc, ch, sc.arrays.S, cra.CraOptions(polish=False))
    assert np.all(np.bincount(sc.arrays.home, sol.beta, sc.num_uavs) <= 1 + 1e-6)
    assert sol.trace.shape == (sol.iterations + 1, sc.num_users)


def test_kkt_allocation_floor_overload():
    beta, xi = cra.kkt_allocation(np.array([1.0, 2.0]), np.array([0.8, 0.6]))
    np.testing.assert_allclose(beta.sum(), 1.0)
    assert xi == np.inf
