"""Problem configuration: dimensions, physics, unit parsing, and INI ingestion.

All quantities are stored in linear SI units.  Config files may give powers
in dBm and ratios/gains in dB with an explicit suffix ("30 dBm", "-30 dB");
they are converted on ingestion.
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "parse_quantity",
    "Geometry",
    "ChannelParams",
    "NetworkConfig",
    "DEFAULT_SETTINGS",
    "load_settings",
    "merge_settings",
    "ConfigError",
]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration values."""


_QUANTITY_RE = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*(dBm|dB)?\s*$")


def parse_quantity(value) -> float:
    """Parse a scalar that may carry a dBm (power) or dB (ratio) suffix.

    Plain numbers pass through unchanged and are assumed linear.
    """
    if isinstance(value, (int, float)):
        return float(value)
    m = _QUANTITY_RE.match(str(value))
    if m is None:
        raise ConfigError(f"cannot parse quantity {value!r}")
    try:
        num = float(m.group(1))
    except ValueError:
        raise ConfigError(f"cannot parse quantity {value!r}") from None
    unit = m.group(2)
    if unit is None:
        return num
    if unit.lower() == "dbm":
        return 10.0 ** ((num - 30.0) / 10.0)
    return 10.0 ** (num / 10.0)  # dB


def _parse_vector(value, length: int, name: str) -> np.ndarray:
    """Broadcast a scalar or parse a comma-separated list to shape (length,)."""
    if isinstance(value, np.ndarray):
        vec = value.astype(float)
    elif isinstance(value, (list, tuple)):
        vec = np.array([parse_quantity(v) for v in value], dtype=float)
    elif isinstance(value, str) and "," in value:
        vec = np.array([parse_quantity(v) for v in value.split(",")], dtype=float)
    else:
        vec = np.full(length, parse_quantity(value))
    if vec.shape != (length,):
        raise ConfigError(f"{name}: expected {length} entries, got shape {vec.shape}")
    return vec


def _parse_point(value) -> np.ndarray:
    if isinstance(value, np.ndarray):
        pt = value.astype(float)
    else:
        pt = np.array([float(v) for v in str(value).split(",")], dtype=float)
    if pt.shape != (3,):
        raise ConfigError(f"positions must be 3D, got {value!r}")
    return pt


@dataclass
class Geometry:
    """Node positions in meters. User positions are one row per receiver."""

    ap_position: np.ndarray
    irs_position: np.ndarray
    user_positions: np.ndarray  # (K, 3)

    def __post_init__(self):
        self.ap_position = np.asarray(self.ap_position, dtype=float).reshape(3)
        self.irs_position = np.asarray(self.irs_position, dtype=float).reshape(3)
        self.user_positions = np.atleast_2d(np.asarray(self.user_positions, dtype=float))
        if self.user_positions.shape[1] != 3:
            raise ConfigError("user_positions must have shape (K, 3)")
        # coincident nodes make the pathloss undefined
        nodes = [("ap", self.ap_position), ("irs", self.irs_position)]
        for name, pos in nodes:
            d = np.linalg.norm(self.user_positions - pos, axis=1)
            if np.any(d <= 0.0):
                raise ConfigError(f"a user position coincides with the {name}")
        if np.linalg.norm(self.ap_position - self.irs_position) <= 0.0:
            raise ConfigError("AP and IRS positions coincide")

    @property
    def num_users(self) -> int:
        return self.user_positions.shape[0]


@dataclass
class ChannelParams:
    """Per-link-class fading and pathloss parameters.

    Rician factors are linear (kappa = inf means a purely deterministic link,
    kappa = 0 means Rayleigh).  Pathloss follows ref_gain * (d/ref_distance)^-exp.
    """

    carrier_frequency_hz: float = 2.4e9
    ref_gain: float = 1e-3  # -30 dB at ref_distance
    ref_distance_m: float = 1.0
    pathloss_exp_ap_irs: float = 2.2
    pathloss_exp_irs_user: float = 2.8
    pathloss_exp_ap_user: float = 3.5
    rician_ap_irs: float = 10.0
    rician_irs_user: float = 10.0
    rician_ap_user: float = 0.0
    irs_rows: int = 0  # 0 means: pick the most square factorization of S

    def __post_init__(self):
        for name in ("rician_ap_irs", "rician_irs_user", "rician_ap_user"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.ref_gain <= 0 or self.ref_distance_m <= 0:
            raise ConfigError("ref_gain and ref_distance_m must be positive")


def _square_grid(num_elements: int) -> tuple[int, int]:
    """Most square (rows, cols) factorization with rows * cols == num_elements."""
    r = int(np.sqrt(num_elements))
    while num_elements % r != 0:
        r -= 1
    return r, num_elements // r


@dataclass
class NetworkConfig:
    """Static problem dimensions and physics for one network instance."""

    num_antennas: int
    num_users: int
    num_irs_elements: int
    power_budget: float
    noise_variances: np.ndarray  # (K,)
    sumrate_weights: np.ndarray  # (K,)
    geometry: Geometry
    channel: ChannelParams = field(default_factory=ChannelParams)

    def __post_init__(self):
        if min(self.num_antennas, self.num_users, self.num_irs_elements) < 1:
            raise ConfigError("dimensions must all be >= 1")
        self.power_budget = parse_quantity(self.power_budget)
        if self.power_budget <= 0:
            raise ConfigError("power_budget must be > 0")
        self.noise_variances = _parse_vector(
            self.noise_variances, self.num_users, "noise_variances"
        )
        self.sumrate_weights = _parse_vector(
            self.sumrate_weights, self.num_users, "sumrate_weights"
        )
        if np.any(self.noise_variances <= 0) or np.any(self.sumrate_weights <= 0):
            raise ConfigError("noise variances and weights must be strictly positive")
        if self.geometry.num_users != self.num_users:
            raise ConfigError("geometry has a different number of users than the config")
        rows = self.channel.irs_rows
        if rows <= 0:
            rows, _ = _square_grid(self.num_irs_elements)
        if self.num_irs_elements % rows != 0:
            raise ConfigError("irs_rows must divide num_irs_elements")
        self.channel.irs_rows = rows

    @property
    def irs_grid(self) -> tuple[int, int]:
        rows = self.channel.irs_rows
        return rows, self.num_irs_elements // rows

    @property
    def link_count(self) -> int:
        """Total scalar cascaded links: S*M + S*K + M*K."""
        s, m, k = self.num_irs_elements, self.num_antennas, self.num_users
        return s * m + s * k + m * k


# ---------------------------------------------------------------------------
# Settings: a flat dict-of-sections mirror of the INI config file. Presets and
# CLI overrides operate on settings; builders in experiments.py turn them into
# typed objects. The run manifest stores the fully resolved settings.
# ---------------------------------------------------------------------------

DEFAULT_SETTINGS: dict[str, dict[str, str]] = {
    "network": {
        "num_antennas": "4",
        "num_users": "4",
        "num_irs_elements": "64",
        "power_budget": "30 dBm",
        "noise_variance": "-54 dBm",
        "sumrate_weights": "1.0",
    },
    "geometry": {
        "ap_position": "0,0,10",
        "irs_position": "100,0,6",
        "user_disc_center": "102,3,1.5",
        "user_disc_radius": "3.0",
        "user_positions": "",  # explicit "x,y,z; x,y,z; ..." overrides the disc
    },
    "channel": {
        "carrier_frequency": "2.4e9",
        "ref_pathloss": "-30 dB",
        "ref_distance": "1.0",
        "pathloss_exp_ap_irs": "2.2",
        "pathloss_exp_irs_user": "2.8",
        "pathloss_exp_ap_user": "3.5",
        "rician_ap_irs": "10 dB",
        "rician_irs_user": "10 dB",
        "rician_ap_user": "0",
        "irs_rows": "0",
    },
    "irs": {
        "parametrization": "ideal_phase",
        "c_min_pf": "0.5",
        "c_max_pf": "6.0",
        "top_inductance": "1.8e-9",
        "bottom_inductance": "0.5e-9",
        "loss_resistance": "0.5",
        "intrinsic_impedance": "377.0",
    },
    "optimizer": {
        "step_size": "0.1",
        "smoothing": "0.05",
        "horizon": "5000",
        "wmmse_iters": "10",
        "wmmse_schedule": "",  # comma list; overrides wmmse_iters when set
        "schedule_period": "1600",
        "return_rule": "final",
        "theta0": "zeros",
        "step_decay": "false",
        "wmmse_tolerance": "0",
        "wmmse_init": "mrt",
        "warm_start": "false",
        "ma_window": "200",
        "gap_cadence": "0",
        "gap_reference_budget": "200",
        "batch_probes": "1",
    },
    "experiment": {
        "replications": "1",
        "scale": "desk",
        "seed": "0",
        "out_dir": "runs",
    },
}


def merge_settings(base: dict, *overrides: dict) -> dict:
    """Deep-merge settings dicts; later arguments win. Unknown keys rejected."""
    out = {sec: dict(vals) for sec, vals in base.items()}
    for ov in overrides:
        for sec, vals in ov.items():
            if sec not in out:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, val in vals.items():
                if key not in out[sec]:
                    raise ConfigError(f"unknown config key {sec}.{key}")
                out[sec][key] = str(val)
    return out


def load_settings(path: str, base: dict | None = None) -> dict:
    """Read an INI config file and merge it over the defaults."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    file_settings = {sec: dict(parser[sec]) for sec in parser.sections()}
    return merge_settings(base or DEFAULT_SETTINGS, file_settings)


def settings_bool(text: str) -> bool:
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def parse_user_positions(text: str) -> np.ndarray | None:
    """Parse 'x,y,z; x,y,z; ...' into a (K, 3) array, or None when empty."""
    text = text.strip()
    if not text:
        return None
    rows = [_parse_point(chunk) for chunk in text.split(";") if chunk.strip()]
    return np.vstack(rows)


def parse_point(value) -> np.ndarray:
    return _parse_point(value)
