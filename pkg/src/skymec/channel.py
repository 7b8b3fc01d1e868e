"""Link-quality model: distances, LoS probability, path loss and rates.

Everything here is a pure function of a :class:`NetworkScenario`.  dB
inputs are converted to linear scale at the point of use.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import NetworkScenario, RadioParams, db_to_linear

SPEED_OF_LIGHT = 299_792_458.0


class ChannelDomainError(ValueError):
    """Raised for degenerate geometry (zero distance, co-located UAVs)."""


def a2g_distance(user_xy, uav_xy, altitude):
    """3-D user-UAV distance; broadcasts over arrays."""
    user_xy = np.asarray(user_xy, dtype=float)
    uav_xy = np.asarray(uav_xy, dtype=float)
    d2 = ((uav_xy - user_xy) ** 2).sum(axis=-1) + np.asarray(altitude, dtype=float) ** 2
    return np.sqrt(d2)


def horizontal_distance(user_xy, uav_xy):
    diff = np.asarray(uav_xy, dtype=float) - np.asarray(user_xy, dtype=float)
    return np.sqrt((diff**2).sum(axis=-1))


def los_probability(d_horiz, altitude, env_constants=(9.61, 0.16), literal_sign=False):
    """Probability that the user-UAV link is line of sight.

    Uses the elevation angle of the UAV seen from the user, in degrees.
    With ``literal_sign`` the exponent keeps a positive sign, which makes the
    probability grow with distance; the default is the decreasing form.
    """
    c_env, d_env = env_constants
    elev = np.degrees(np.arctan2(np.asarray(altitude, dtype=float), np.asarray(d_horiz, dtype=float)))
    sign = 1.0 if literal_sign else -1.0
    return 1.0 / (1.0 + c_env * np.exp(sign * d_env * (elev - c_env)))


def branch_pathloss_db(distance, carrier_hz, exponent, added_loss_db):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ChannelDomainError("path loss needs a strictly positive distance")
    return 2.0 * exponent * np.log10(4.0 * np.pi * distance * carrier_hz / SPEED_OF_LIGHT) + added_loss_db


def a2g_pathloss_db(distance, d_horiz, altitude, radio: RadioParams):
    """LoS/NLoS probability-weighted path loss in dB."""
    p_los = los_probability(d_horiz, altitude, radio.env_constants, radio.los_literal_sign)
    los = branch_pathloss_db(distance, radio.carrier_a2g, radio.pathloss_exponent, radio.added_loss_los)
    nlos = branch_pathloss_db(distance, radio.carrier_a2g, radio.pathloss_exponent, radio.added_loss_nlos)
    return p_los * los + (1.0 - p_los) * nlos


def gain_from_db(loss_db):
    return 10.0 ** (-np.asarray(loss_db, dtype=float) / 10.0)


def spectral_efficiency(tx_power, gain, noise_power):
    return np.log2(1.0 + np.asarray(tx_power) * np.asarray(gain) / noise_power)


def uplink_rate(beta, bandwidth, spectral_eff):
    return np.asarray(beta, dtype=float) * bandwidth * np.asarray(spectral_eff, dtype=float)


def a2a_loss_db(distance, carrier_hz, attenuation_db):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ChannelDomainError("co-located UAVs have no defined A2A path loss")
    theta = (
        20.0 * np.log10(distance)
        + 20.0 * np.log10(carrier_hz)
        + 10.0 * np.log10((2.0 * np.pi / SPEED_OF_LIGHT) ** 2)
    )
    return theta + attenuation_db


def a2a_rate(distance, tx_power, radio: RadioParams):
    gain = gain_from_db(a2a_loss_db(distance, radio.carrier_a2g, radio.a2a_attenuation))
    return radio.a2a_bandwidth * spectral_efficiency(tx_power, gain, radio.noise_power)


def backhaul_rx_power(distance, tx_power, radio: RadioParams, rx_gain_db):
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise ChannelDomainError("UAV-BS distance must be positive")
    friis = SPEED_OF_LIGHT / (4.0 * np.pi * distance * radio.carrier_mm)
    g = db_to_linear(radio.uav_tx_antenna_gain) * db_to_linear(rx_gain_db)
    return np.asarray(tx_power, dtype=float) * g * friis**radio.friis_exponent


def backhaul_rate(distance, tx_power, radio: RadioParams, rx_gain_db):
    p_rx = backhaul_rx_power(distance, tx_power, radio, rx_gain_db)
    bw = radio.mmwave_bandwidth
    return bw * np.log2(1.0 + p_rx / (bw * radio.noise_power))


@dataclass(frozen=True)
class ChannelState:
    """Precomputed link quantities.

    ``gain``/``spectral_eff`` are per user towards its home UAV; the
    ``*_all`` variants are (users, UAVs) matrices.  ``a2a_rate`` is
    (UAVs, UAVs) with ``inf`` on the diagonal (no transfer needed).
    """

    distance_all: np.ndarray
    p_los_all: np.ndarray
    pathloss_db_all: np.ndarray
    gain_all: np.ndarray
    spectral_eff_all: np.ndarray
    gain: np.ndarray
    spectral_eff: np.ndarray
    uav_distance: np.ndarray
    a2a_gain: np.ndarray
    a2a_rate: np.ndarray
    bs_distance: np.ndarray
    bs_rx_power: np.ndarray
    backhaul_rate: np.ndarray

    def uplink_rate(self, beta, scenario: NetworkScenario) -> np.ndarray:
        return uplink_rate(beta, scenario.radio.a2g_bandwidth_per_uav, self.spectral_eff)


def compute_channel(scenario: NetworkScenario) -> ChannelState:
    a = scenario.arrays
    r = scenario.radio
    uxy = a.user_xy[:, None, :]
    vxy = a.uav_xy[None, :, :]
    d_h = horizontal_distance(uxy, vxy)
    dist = a2g_distance(uxy, vxy, a.h[None, :])
    p_los = los_probability(d_h, a.h[None, :], r.env_constants, r.los_literal_sign)
    pl = a2g_pathloss_db(dist, d_h, a.h[None, :], r)
    g = gain_from_db(pl)
    gam = spectral_efficiency(a.P_u[:, None], g, r.noise_power)
    rows = np.arange(scenario.num_users)

    V = scenario.num_uavs
    dz = a.h[:, None] - a.h[None, :]
    dvw = np.sqrt(((a.uav_xy[:, None, :] - a.uav_xy[None, :, :]) ** 2).sum(-1) + dz**2)
    off = ~np.eye(V, dtype=bool)
    g_vw = np.ones((V, V))
    rate_vw = np.full((V, V), np.inf)
    if V > 1:
        g_vw[off] = gain_from_db(a2a_loss_db(dvw[off], r.carrier_a2g, r.a2a_attenuation))
        rate_vw[off] = (r.a2a_bandwidth * spectral_efficiency(
            np.broadcast_to(a.P_v[:, None], (V, V))[off], g_vw[off], r.noise_power))

    bs = np.asarray(scenario.bs.position, dtype=float)
    d0 = np.sqrt(((a.uav_xy - bs[:2]) ** 2).sum(-1) + (a.h - bs[2]) ** 2)
    p0 = backhaul_rx_power(d0, a.P_v0, r, scenario.bs.rx_antenna_gain)
    r0 = backhaul_rate(d0, a.P_v0, r, scenario.bs.rx_antenna_gain)
    return ChannelState(
        distance_all=dist,
        p_los_all=p_los,
        pathloss_db_all=pl,
        gain_all=g,
        spectral_eff_all=gam,
        gain=g[rows, a.home],
        spectral_eff=gam[rows, a.home],
        uav_distance=dvw,
        a2a_gain=g_vw,
        a2a_rate=rate_vw,
        bs_distance=d0,
        bs_rx_power=p0,
        backhaul_rate=r0,
    )
