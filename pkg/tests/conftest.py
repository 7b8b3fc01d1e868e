import numpy as np
import pytest
from hypothesis import settings

from skymec.channel import compute_channel
from skymec.scenario import (BaseStation, HoverParams, NetworkScenario, RadioParams, TaskProfile,
                             UavNode, UserNode, generate_random)

settings.register_profile("suite", max_examples=40, deadline=None)
settings.load_profile("suite")


def make_user(uid, home, pos=(100.0, 100.0), S=8e8, C=10.0, f=3e6, P=0.2, E=100e3, T=1000.0):
    return UserNode(id=uid, position=pos, local_cpu=f, tx_power=P, energy_budget=E,
                    chip_constant=5e-27, task=TaskProfile(S, C, T), home_uav=home)


def make_uav(vid, pos=(100.0, 100.0), F=2e9, E=500e3, h=50.0, P=1.0, P0=1.0):
    return UavNode(id=vid, position=pos, altitude=h, cpu_capacity=F, tx_power_a2a=P,
                   tx_power_backhaul=P0, energy_budget=E, chip_constant=5e-27, hover=HoverParams())


def make_scenario(users, uavs, bs=None, radio=None):
    return NetworkScenario(tuple(users), tuple(uavs), bs or BaseStation(), radio or RadioParams(),
                           rng_seed=None)


@pytest.fixture(scope="session")
def small():
    sc = generate_random(3, 10, seed=0)
    return sc, compute_channel(sc)


@pytest.fixture(scope="session")
def medium():
    sc = generate_random(4, 12, seed=3)
    return sc, compute_channel(sc)


@pytest.fixture(scope="session")
def default_sc():
    sc = generate_random(10, 50, seed=0)
    return sc, compute_channel(sc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def golden_section(f, lo, hi, tol=1e-15, max_iter=500):
    """Minimise a unimodal f on [lo, hi]; oracle kept independent of the package."""
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return 0.5 * (a + b)
