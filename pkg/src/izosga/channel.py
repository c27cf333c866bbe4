"""Channel simulation: Rician intermediate links and the IRS-shaped effective
channel.

A state of nature is one joint draw of the AP-IRS matrix, the per-user
IRS-user vectors, and the per-user direct AP-user vectors.  Line-of-sight
components are fixed by the geometry and shared across draws; scattered
components are redrawn i.i.d. per state.  The effective channel seen by user
k is

    h_k = G^H Diag(gamma) h_r_k + h_d_k

with gamma the per-element reflection coefficients of the IRS.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, NetworkConfig
from .reflection import IrsParams, reflection_and_clamps

__all__ = [
    "StateOfNature",
    "ChannelModel",
    "OmegaSampler",
    "sample_state",
    "effective_channel",
    "effective_from_gamma",
]


@dataclass
class StateOfNature:
    """One draw of all intermediate channels (the random environment)."""

    ap_irs: np.ndarray  # (S, M) matrix G
    irs_user: np.ndarray  # (S, K), column k is h_r_k
    direct: np.ndarray  # (M, K), column k is h_d_k
    seed_tag: int = -1

    def __post_init__(self):
        if not (
            np.all(np.isfinite(self.ap_irs.view(float)))
            and np.all(np.isfinite(self.irs_user.view(float)))
            and np.all(np.isfinite(self.direct.view(float)))
        ):
            raise ValueError("state of nature contains non-finite entries")


def _unit(vec: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(vec)
    if n <= 0:
        raise ConfigError("zero-length direction (coincident nodes?)")
    return vec / n


def ula_response(num_antennas: int, direction: np.ndarray, axis: np.ndarray) -> np.ndarray:
    """Uniform linear array response, half-wavelength spacing along `axis`."""
    proj = float(np.dot(_unit(direction), _unit(axis)))
    return np.exp(1j * np.pi * proj * np.arange(num_antennas))


def upa_response(
    rows: int, cols: int, direction: np.ndarray, axis_r: np.ndarray, axis_c: np.ndarray
) -> np.ndarray:
    """Uniform planar array response, half-wavelength grid, flattened row-major."""
    d = _unit(direction)
    pr = float(np.dot(d, _unit(axis_r)))
    pc = float(np.dot(d, _unit(axis_c)))
    phase = np.pi * (pr * np.arange(rows)[:, None] + pc * np.arange(cols)[None, :])
    return np.exp(1j * phase).ravel()


def _rician_weights(kappa: float) -> tuple[float, float]:
    """(LoS, scattered) amplitude weights; kappa = inf is purely deterministic."""
    if np.isinf(kappa):
        return 1.0, 0.0
    return np.sqrt(kappa / (1.0 + kappa)), np.sqrt(1.0 / (1.0 + kappa))


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian entries."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


class ChannelModel:
    """Derived per-config channel quantities: pathloss gains and LoS factors.

    Constructing this once per run avoids recomputing the deterministic
    geometry-dependent parts on every draw.
    """

    # array axes: the AP is a ULA along x; the IRS is a wall-mounted UPA in
    # the y-z plane (rows along z, columns along y).
    _AP_AXIS = np.array([1.0, 0.0, 0.0])
    _IRS_AXIS_R = np.array([0.0, 0.0, 1.0])
    _IRS_AXIS_C = np.array([0.0, 1.0, 0.0])

    def __init__(self, config: NetworkConfig):
        self.config = config
        geo = config.geometry
        ch = config.channel
        m, k, s = config.num_antennas, config.num_users, config.num_irs_elements
        rows, cols = config.irs_grid

        def pathloss(dist: float, exponent: float) -> float:
            return ch.ref_gain * (dist / ch.ref_distance_m) ** (-exponent)

        d_ap_irs = np.linalg.norm(geo.irs_position - geo.ap_position)
        self.gain_ap_irs = pathloss(d_ap_irs, ch.pathloss_exp_ap_irs)
        d_irs_user = np.linalg.norm(geo.user_positions - geo.irs_position, axis=1)
        self.gain_irs_user = pathloss(d_irs_user, ch.pathloss_exp_irs_user)
        d_ap_user = np.linalg.norm(geo.user_positions - geo.ap_position, axis=1)
        self.gain_ap_user = pathloss(d_ap_user, ch.pathloss_exp_ap_user)

        # LoS factors, unit-modulus entries
        a_ap_to_irs = ula_response(m, geo.irs_position - geo.ap_position, self._AP_AXIS)
        a_irs_to_ap = upa_response(
            rows, cols, geo.ap_position - geo.irs_position, self._IRS_AXIS_R, self._IRS_AXIS_C
        )
        self.los_ap_irs = np.outer(a_irs_to_ap, a_ap_to_irs.conj())  # (S, M)
        self.los_irs_user = np.empty((s, k), dtype=complex)
        self.los_ap_user = np.empty((m, k), dtype=complex)
        for i in range(k):
            user = geo.user_positions[i]
            self.los_irs_user[:, i] = upa_response(
                rows, cols, user - geo.irs_position, self._IRS_AXIS_R, self._IRS_AXIS_C
            )
            self.los_ap_user[:, i] = ula_response(m, user - geo.ap_position, self._AP_AXIS)

        self.w_ap_irs = _rician_weights(ch.rician_ap_irs)
        self.w_irs_user = _rician_weights(ch.rician_irs_user)
        self.w_ap_user = _rician_weights(ch.rician_ap_user)

    def sample(self, rng: np.random.Generator, seed_tag: int = -1) -> StateOfNature:
        """Draw one state of nature. The draw order (G, then IRS-user, then
        direct) is fixed so identical generator states give identical states."""
        cfg = self.config
        m, k, s = cfg.num_antennas, cfg.num_users, cfg.num_irs_elements
        wl, ws = self.w_ap_irs
        g = np.sqrt(self.gain_ap_irs) * (wl * self.los_ap_irs + ws * _cn(rng, (s, m)))
        wl, ws = self.w_irs_user
        hr = np.sqrt(self.gain_irs_user)[None, :] * (
            wl * self.los_irs_user + ws * _cn(rng, (s, k))
        )
        wl, ws = self.w_ap_user
        hd = np.sqrt(self.gain_ap_user)[None, :] * (
            wl * self.los_ap_user + ws * _cn(rng, (m, k))
        )
        return StateOfNature(ap_irs=g, irs_user=hr, direct=hd, seed_tag=seed_tag)


class OmegaSampler:
    """Reproducible, tag-addressable state-of-nature draws.

    Draw `tag` comes from a generator seeded by (entropy, prefix + (tag,)),
    so the same (config, entropy, prefix, tag) tuple is bit-identical no
    matter in which order or how often tags are requested.  The prefix keeps
    replications and diagnostic sample sets on disjoint streams.
    """

    def __init__(self, config: NetworkConfig, entropy, prefix: tuple = ()):
        self.model = ChannelModel(config)
        self.entropy = entropy
        self.prefix = tuple(int(p) for p in prefix)
        self.draw_count = 0

    def draw(self, tag: int) -> StateOfNature:
        key = self.prefix + (int(tag),)
        rng = np.random.default_rng(np.random.SeedSequence(self.entropy, spawn_key=key))
        self.draw_count += 1
        return self.model.sample(rng, seed_tag=tag)


def sample_state(
    config: NetworkConfig, rng: np.random.Generator, seed_tag: int = -1
) -> StateOfNature:
    """One i.i.d. state-of-nature draw from an explicit generator."""
    return ChannelModel(config).sample(rng, seed_tag=seed_tag)


def effective_from_gamma(gamma: np.ndarray, omega: StateOfNature) -> np.ndarray:
    """Effective channel (M, K) for given reflection coefficients."""
    if gamma.shape[0] != omega.ap_irs.shape[0]:
        raise ValueError("reflection vector length does not match the IRS size")
    return omega.ap_irs.conj().T @ (gamma[:, None] * omega.irs_user) + omega.direct


def effective_channel(params: IrsParams, omega: StateOfNature) -> np.ndarray:
    """Effective channel (M, K) for IRS parameters; column k is h_k."""
    gamma, _ = reflection_and_clamps(params)
    return effective_from_gamma(gamma, omega)
