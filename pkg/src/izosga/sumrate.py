"""Weighted sumrate objective, per-user SINR, and its channel co-gradient.

Channels are (M, K) complex arrays whose column k is the effective channel
h_k of user k.  Stacked-vector quantities (the co-gradient, channel
differences) use column stacking, i.e. ``ravel(order="F")``, so user k
occupies entries [k*M, (k+1)*M).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import NetworkConfig

__all__ = ["Precoder", "SumrateValue", "sinr", "sumrate", "cogradient", "stack_channel"]

POWER_SLACK = 1e-9  # relative feasibility slack on ||W||_F^2 <= P


@dataclass
class Precoder:
    """Transmit precoder W (M, K), column k serving user k, with its budget."""

    w: np.ndarray
    power_budget: float

    def __post_init__(self):
        self.w = np.ascontiguousarray(self.w, dtype=np.complex128)
        if self.w.ndim != 2:
            raise ValueError("precoder must be a 2-d array (antennas x users)")
        if not np.all(np.isfinite(self.w.view(np.float64))):
            raise ValueError("precoder contains non-finite entries")
        if self.power_budget <= 0:
            raise ValueError("power budget must be positive")
        if self.power() > self.power_budget * (1.0 + POWER_SLACK):
            raise ValueError("precoder violates the Frobenius power budget")

    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass
class SumrateValue:
    value: float
    per_user_sinr: np.ndarray = field(repr=False)


def _check_dims(w: np.ndarray, h: np.ndarray, config: NetworkConfig):
    if h.shape != (config.num_antennas, config.num_users):
        raise ValueError("channel shape %s does not match config" % (h.shape,))
    if w.shape != h.shape:
        raise ValueError("precoder shape %s does not match channel" % (w.shape,))


def sinr(precoder: Precoder, h_k: np.ndarray, k: int, noise_k: float) -> float:
    """SINR of user k: |h_k^H w_k|^2 / (interference + noise)."""
    if noise_k <= 0:
        raise ValueError("noise variance must be positive")
    w = precoder.w
    if h_k.shape != (w.shape[0],):
        raise ValueError("channel vector length does not match the precoder")
    t = h_k.conj() @ w
    p = np.abs(t) ** 2
    sig = p[k]
    if sig < np.finfo(np.float64).tiny:
        return 0.0
    return float(sig / (p.sum() - sig + noise_k))


def sumrate(precoder: Precoder, h: np.ndarray, config: NetworkConfig) -> SumrateValue:
    """Weighted sumrate sum_k alpha_k log2(1 + SINR_k) in bps/Hz."""
    _check_dims(precoder.w, h, config)
    value, per_user = _kernels.sumrate_and_sinr(
        np.ascontiguousarray(h, dtype=np.complex128),
        precoder.w,
        config.noise_variances,
        config.sumrate_weights,
    )
    return SumrateValue(value=value, per_user_sinr=np.asarray(per_user))


def cogradient(precoder: Precoder, h: np.ndarray, config: NetworkConfig) -> np.ndarray:
    """Co-gradient g of the weighted sumrate wrt the stacked channel.

    Returned as a stacked complex vector of length M*K (column order), in the
    convention dF = 2 Re(g^H dz) for a stacked perturbation dz.
    """
    _check_dims(precoder.w, h, config)
    g = _kernels.cogradient(
        np.ascontiguousarray(h, dtype=np.complex128),
        precoder.w,
        config.noise_variances,
        config.sumrate_weights,
    )
    return np.asarray(g).ravel(order="F")


def stack_channel(h: np.ndarray) -> np.ndarray:
    """Column-stack an (M, K) channel into the M*K vector convention."""
    return np.asarray(h).ravel(order="F")
