"""Problem instances: geometry, task profiles, radio/energy parameters.

A :class:`NetworkScenario` is immutable.  Vectorised views of its fields
(``scenario.arrays``) are computed once and shared by every solver block.
"""
from __future__ import annotations

import json
import math
from dataclasses import MISSING, asdict, dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

BITS_PER_MB = 8e6


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) * 1e-3


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


class ScenarioError(ValueError):
    """Raised when a scenario violates one of its invariants."""


class ScenarioParseError(ValueError):
    """Raised when a scenario document is malformed."""


@dataclass(frozen=True)
class TaskProfile:
    input_size_bits: float
    cycles_per_bit: float
    deadline: float


@dataclass(frozen=True)
class HoverParams:
    thrust: float = 30.0
    power_efficiency: float = 0.7
    rotor_count: int = 4
    rotor_diameter: float = 0.254
    air_density: float = 1.225

    @property
    def power(self) -> float:
        """Rotor power draw in watts while hovering."""
        eta = self.thrust
        denom = self.power_efficiency * math.sqrt(
            0.5 * math.pi * self.rotor_count * self.rotor_diameter**2 * self.air_density
        )
        return eta * math.sqrt(eta) / denom


@dataclass(frozen=True)
class UserNode:
    id: int
    position: tuple[float, float]
    local_cpu: float
    tx_power: float
    energy_budget: float
    chip_constant: float
    task: TaskProfile
    home_uav: int


@dataclass(frozen=True)
class UavNode:
    id: int
    position: tuple[float, float]
    altitude: float
    cpu_capacity: float
    tx_power_a2a: float
    tx_power_backhaul: float
    energy_budget: float
    chip_constant: float
    hover: HoverParams = field(default_factory=HoverParams)


@dataclass(frozen=True)
class BaseStation:
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)
    cpu_capacity: float = 3e9
    rx_antenna_gain: float = -50.0  # dB
    chip_constant: float = 5e-27


@dataclass(frozen=True)
class RadioParams:
    a2g_bandwidth_per_uav: float = 3e6
    a2a_bandwidth: float = 1.7e6
    mmwave_bandwidth: float = 1.8e6
    carrier_a2g: float = 2e9
    carrier_mm: float = 28e9
    noise_power: float = dbm_to_watt(-174.0)
    pathloss_exponent: float = 2.0
    env_constants: tuple[float, float] = (9.61, 0.16)
    added_loss_los: float = 1.0  # dB
    added_loss_nlos: float = 20.0  # dB
    a2a_attenuation: float = 1.0  # dB
    uav_tx_antenna_gain: float = 0.0  # dB
    friis_exponent: int = 2
    los_literal_sign: bool = False


@dataclass(frozen=True)
class ScenarioArrays:
    """Column views of a scenario, indexed by list position."""

    user_xy: np.ndarray
    home: np.ndarray  # UAV index per user
    S: np.ndarray
    C: np.ndarray
    T: np.ndarray
    f_loc: np.ndarray
    P_u: np.ndarray
    E_u_max: np.ndarray
    kappa_u: np.ndarray
    uav_xy: np.ndarray
    h: np.ndarray
    F: np.ndarray  # UAV CPU capacities
    P_v: np.ndarray
    P_v0: np.ndarray
    E_v_max: np.ndarray
    kappa_v: np.ndarray
    P_hov: np.ndarray
    members: tuple[np.ndarray, ...]  # user indices per UAV


@dataclass(frozen=True)
class NetworkScenario:
    users: tuple[UserNode, ...]
    uavs: tuple[UavNode, ...]
    bs: BaseStation
    radio: RadioParams
    rng_seed: int | None = None
    region_side_m: float = 400.0

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        object.__setattr__(self, "uavs", tuple(self.uavs))
        validate(self)

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def num_uavs(self) -> int:
        return len(self.uavs)

    @cached_property
    def arrays(self) -> ScenarioArrays:
        idx = {v.id: i for i, v in enumerate(self.uavs)}
        home = np.array([idx[u.home_uav] for u in self.users], dtype=int)
        users, uavs = self.users, self.uavs
        arr = lambda xs: np.array(xs, dtype=float)  # noqa: E731
        return ScenarioArrays(
            user_xy=arr([u.position for u in users]).reshape(-1, 2),
            home=home,
            S=arr([u.task.input_size_bits for u in users]),
            C=arr([u.task.cycles_per_bit for u in users]),
            T=arr([u.task.deadline for u in users]),
            f_loc=arr([u.local_cpu for u in users]),
            P_u=arr([u.tx_power for u in users]),
            E_u_max=arr([u.energy_budget for u in users]),
            kappa_u=arr([u.chip_constant for u in users]),
            uav_xy=arr([v.position for v in uavs]).reshape(-1, 2),
            h=arr([v.altitude for v in uavs]),
            F=arr([v.cpu_capacity for v in uavs]),
            P_v=arr([v.tx_power_a2a for v in uavs]),
            P_v0=arr([v.tx_power_backhaul for v in uavs]),
            E_v_max=arr([v.energy_budget for v in uavs]),
            kappa_v=arr([v.chip_constant for v in uavs]),
            P_hov=arr([v.hover.power for v in uavs]),
            members=tuple(np.flatnonzero(home == i) for i in range(len(uavs))),
        )


def _positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ScenarioError(f"{name} must be positive and finite, got {value!r}")


def validate(s: NetworkScenario) -> None:
    if not s.uavs:
        raise ScenarioError("scenario needs at least one UAV")
    uav_ids = [v.id for v in s.uavs]
    if len(set(uav_ids)) != len(uav_ids):
        raise ScenarioError("duplicate UAV ids")
    user_ids = [u.id for u in s.users]
    if len(set(user_ids)) != len(user_ids):
        raise ScenarioError("duplicate user ids")
    side = s.region_side_m
    _positive("region_side_m", side)

    def inside(xy, what):
        x, y = xy[0], xy[1]
        if not (0.0 <= x <= side and 0.0 <= y <= side):
            raise ScenarioError(f"{what} position {tuple(xy)} outside the {side} m region")

    known = set(uav_ids)
    for u in s.users:
        tag = f"user {u.id}"
        if u.home_uav not in known:
            raise ScenarioError(f"{tag}: home_uav {u.home_uav} does not exist")
        _positive(f"{tag} local_cpu", u.local_cpu)
        _positive(f"{tag} tx_power", u.tx_power)
        _positive(f"{tag} energy_budget", u.energy_budget)
        _positive(f"{tag} chip_constant", u.chip_constant)
        _positive(f"{tag} input_size_bits", u.task.input_size_bits)
        _positive(f"{tag} cycles_per_bit", u.task.cycles_per_bit)
        _positive(f"{tag} deadline", u.task.deadline)
        inside(u.position, tag)
    for v in s.uavs:
        tag = f"uav {v.id}"
        _positive(f"{tag} altitude", v.altitude)
        _positive(f"{tag} cpu_capacity", v.cpu_capacity)
        _positive(f"{tag} energy_budget", v.energy_budget)
        _positive(f"{tag} chip_constant", v.chip_constant)
        if v.tx_power_a2a < 0 or v.tx_power_backhaul < 0:
            raise ScenarioError(f"{tag}: transmit powers must be non-negative")
        hp = v.hover
        for name in ("thrust", "power_efficiency", "rotor_count", "rotor_diameter", "air_density"):
            _positive(f"{tag} hover.{name}", getattr(hp, name))
        if hp.power_efficiency > 1:
            raise ScenarioError(f"{tag}: hover.power_efficiency must be <= 1")
        inside(v.position, tag)
    _positive("bs cpu_capacity", s.bs.cpu_capacity)
    r = s.radio
    for name in ("a2g_bandwidth_per_uav", "a2a_bandwidth", "mmwave_bandwidth",
                 "carrier_a2g", "carrier_mm", "noise_power"):
        _positive(f"radio {name}", getattr(r, name))
    if r.pathloss_exponent < 2:
        raise ScenarioError("radio pathloss_exponent must be >= 2")
    if r.friis_exponent not in (1, 2):
        raise ScenarioError("radio friis_exponent must be 1 or 2")


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamDefaults:
    """Ranges the generator samples from (uniformly)."""

    altitude: float = 50.0
    task_size_mb: tuple[float, float] = (100.0, 500.0)
    cycles_per_bit: tuple[float, float] = (10.0, 50.0)
    local_cpu_hz: tuple[float, float] = (0.5e6, 3e6)
    uav_cpu_hz: tuple[float, float] = (1e9, 3.5e9)
    bs_cpu_hz: tuple[float, float] = (2e9, 4e9)
    deadline_s: tuple[float, float] = (500.0, 3000.0)
    user_tx_dbm: float = 23.0
    uav_tx_dbm: float = 30.0
    backhaul_tx_dbm: float = 30.0
    user_energy_j: float = 100e3
    uav_energy_j: float = 500e3
    chip_constant: float = 5e-27
    bs_gain_db: float = -50.0
    hover: HoverParams = field(default_factory=HoverParams)
    radio: RadioParams = field(default_factory=RadioParams)


def _uniform(lo_hi: tuple[float, float], u: np.ndarray) -> np.ndarray:
    lo, hi = lo_hi
    return lo + (hi - lo) * u


def generate_random(
    num_uavs: int,
    num_users: int,
    region_side_m: float = 400.0,
    seed: int = 0,
    param_defaults: ParamDefaults | None = None,
) -> NetworkScenario:
    """Random deployment with nearest-UAV association.

    UAV draws and user draws come from separate streams, so the first ``n``
    users of a scenario are identical for every ``num_users >= n`` under
    the same seed.
    """
    if int(num_uavs) < 1 or int(num_users) < 1:
        raise ScenarioError("num_uavs and num_users must be >= 1")
    if not region_side_m > 0:
        raise ScenarioError("region_side_m must be positive")
    p = param_defaults or ParamDefaults()
    uav_rng = np.random.default_rng([seed, 0])
    user_rng = np.random.default_rng([seed, 1])

    ud = uav_rng.uniform(size=(num_uavs, 3))
    bs_u = uav_rng.uniform()
    uav_xy = ud[:, :2] * region_side_m
    uavs = [
        UavNode(
            id=i,
            position=(float(uav_xy[i, 0]), float(uav_xy[i, 1])),
            altitude=p.altitude,
            cpu_capacity=float(_uniform(p.uav_cpu_hz, ud[i, 2])),
            tx_power_a2a=dbm_to_watt(p.uav_tx_dbm),
            tx_power_backhaul=dbm_to_watt(p.backhaul_tx_dbm),
            energy_budget=p.uav_energy_j,
            chip_constant=p.chip_constant,
            hover=p.hover,
        )
        for i in range(num_uavs)
    ]

    d = user_rng.uniform(size=(num_users, 6))
    xy = d[:, :2] * region_side_m
    # 3-D distance to every UAV; argmin picks the lowest index on ties
    dist = np.sqrt(((xy[:, None, :] - uav_xy[None, :, :]) ** 2).sum(-1) + p.altitude**2)
    home = dist.argmin(axis=1)
    users = [
        UserNode(
            id=k,
            position=(float(xy[k, 0]), float(xy[k, 1])),
            local_cpu=float(_uniform(p.local_cpu_hz, d[k, 4])),
            tx_power=dbm_to_watt(p.user_tx_dbm),
            energy_budget=p.user_energy_j,
            chip_constant=p.chip_constant,
            task=TaskProfile(
                input_size_bits=float(_uniform(p.task_size_mb, d[k, 2]) * BITS_PER_MB),
                cycles_per_bit=float(_uniform(p.cycles_per_bit, d[k, 3])),
                deadline=float(_uniform(p.deadline_s, d[k, 5])),
            ),
            home_uav=int(home[k]),
        )
        for k in range(num_users)
    ]
    bs = BaseStation(
        position=(0.0, 0.0, 0.0),
        cpu_capacity=float(_uniform(p.bs_cpu_hz, bs_u)),
        rx_antenna_gain=p.bs_gain_db,
        chip_constant=p.chip_constant,
    )
    return NetworkScenario(users, uavs, bs, p.radio, rng_seed=seed, region_side_m=region_side_m)


def with_radio(scenario: NetworkScenario, **changes: Any) -> NetworkScenario:
    return replace(scenario, radio=replace(scenario.radio, **changes))


# ---------------------------------------------------------------------------
# Serialisation
# ---------------------------------------------------------------------------

def to_dict(s: NetworkScenario) -> dict:
    return {
        "users": [asdict(u) for u in s.users],
        "uavs": [asdict(v) for v in s.uavs],
        "bs": asdict(s.bs),
        "radio": asdict(s.radio),
        "seed": s.rng_seed,
        "region_side_m": s.region_side_m,
    }


def _build(cls, data: Any, where: str, nested: dict | None = None):
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{where}: expected an object, got {type(data).__name__}")
    kwargs = {}
    for f in cls.__dataclass_fields__.values():
        if f.name not in data:
            if f.default is MISSING and f.default_factory is MISSING:
                raise ScenarioParseError(f"{where}.{f.name}: missing field")
            continue
        val = data[f.name]
        if nested and f.name in nested:
            val = _build(nested[f.name], val, f"{where}.{f.name}")
        elif isinstance(val, list):
            val = tuple(val)
        kwargs[f.name] = val
    unknown = set(data) - set(cls.__dataclass_fields__)
    if unknown:
        raise ScenarioParseError(f"{where}: unknown field(s) {sorted(unknown)}")
    for name, val in kwargs.items():
        if isinstance(val, str):
            raise ScenarioParseError(f"{where}.{name}: expected a number, got string {val!r}")
    return cls(**kwargs)


def from_dict(doc: dict) -> NetworkScenario:
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario document must be a JSON object")
    for key in ("users", "uavs", "bs", "radio"):
        if key not in doc:
            raise ScenarioParseError(f"missing top-level key {key!r}")
    users = [
        _build(UserNode, u, f"users[{i}]", {"task": TaskProfile})
        for i, u in enumerate(doc["users"])
    ]
    uavs = [
        _build(UavNode, v, f"uavs[{i}]", {"hover": HoverParams})
        for i, v in enumerate(doc["uavs"])
    ]
    bs = _build(BaseStation, doc["bs"], "bs")
    radio = _build(RadioParams, doc["radio"], "radio")
    return NetworkScenario(
        users, uavs, bs, radio,
        rng_seed=doc.get("seed"),
        region_side_m=doc.get("region_side_m", 400.0),
    )


def save(scenario: NetworkScenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(scenario), indent=1))


def load(path: str | Path) -> NetworkScenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}: not valid JSON ({exc})") from exc
    return from_dict(doc)
