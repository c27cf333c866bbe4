"""WMMSE inner solver: the inexact precoding oracle with an iteration budget.

One iteration is a full (receiver, weight, precoder) block sweep; the
precoder block enforces the power constraint through a scalar multiplier
found by bisection.  The sweep itself lives in the kernel backends; this
module owns initialization, budgets, reporting, and gap measurement.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .config import NetworkConfig
from .sumrate import Precoder, sumrate

__all__ = [
    "OracleConfig",
    "OracleReport",
    "OracleFailure",
    "initial_precoder",
    "wmmse_solve",
    "measure_gap",
]

INIT_STRATEGIES = ("mrt", "warm", "random")


class OracleFailure(RuntimeError):
    """The inner solver cannot produce a precoder (corrupted input)."""


@dataclass
class OracleConfig:
    """Budget and initialization policy for one oracle call."""

    max_iterations: int = 10
    objective_tolerance: float = 0.0  # relative early stop; 0 disables
    init_strategy: str = "mrt"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("oracle needs at least one iteration")
        if self.objective_tolerance < 0:
            raise ValueError("objective tolerance must be >= 0")
        if self.init_strategy not in INIT_STRATEGIES:
            raise ValueError("init_strategy must be one of %s" % (INIT_STRATEGIES,))


@dataclass
class OracleReport:
    precoder: Precoder
    achieved_sumrate: float
    iterations_used: int
    sumrate_trace: np.ndarray
    suboptimality_gap: Optional[float] = None


def initial_precoder(
    h: np.ndarray,
    config: NetworkConfig,
    strategy: str = "mrt",
    rng: Optional[np.random.Generator] = None,
) -> Precoder:
    """Feasible starting precoder.

    "mrt": matched-filter directions with equal per-user power P/K (columns
    with zero channel stay zero).  "random": complex Gaussian scaled onto the
    power sphere; needs an rng.
    """
    m, k = config.num_antennas, config.num_users
    p = config.power_budget
    if strategy in ("mrt", "warm"):
        norms = np.linalg.norm(h, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        w = np.sqrt(p / k) * (h / safe[None, :])
        w[:, norms == 0] = 0.0
    elif strategy == "random":
        if rng is None:
            raise ValueError("random initialization needs an rng")
        w = rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))
        w *= np.sqrt(p / np.sum(np.abs(w) ** 2))
    else:
        raise ValueError("unknown init strategy %r" % (strategy,))
    return Precoder(w=w, power_budget=p)


def wmmse_solve(
    h: np.ndarray,
    config: NetworkConfig,
    oracle_cfg: OracleConfig,
    warm_start: Optional[Precoder] = None,
    rng: Optional[np.random.Generator] = None,
) -> OracleReport:
    """Run WMMSE for at most the configured budget and report the result.

    warm_start, when given, overrides the configured initialization.  Raises
    OracleFailure on non-finite channels or when the multiplier search inside
    the precoder update cannot bracket a root.
    """
    h = np.ascontiguousarray(h, dtype=np.complex128)
    if h.shape != (config.num_antennas, config.num_users):
        raise ValueError("channel shape %s does not match config" % (h.shape,))
    if not np.all(np.isfinite(h.view(np.float64))):
        raise OracleFailure("channel contains non-finite entries")
    if warm_start is not None:
        w0 = warm_start
    else:
        w0 = initial_precoder(h, config, strategy=oracle_cfg.init_strategy, rng=rng)
    try:
        w, trace = _kernels.wmmse_sweeps(
            h,
            w0.w,
            config.noise_variances,
            config.sumrate_weights,
            config.power_budget,
            oracle_cfg.max_iterations,
            oracle_cfg.objective_tolerance,
        )
    except ValueError as exc:
        raise OracleFailure(str(exc)) from exc
    trace = np.asarray(trace, dtype=float).copy()
    return OracleReport(
        precoder=Precoder(w=np.asarray(w), power_budget=config.power_budget),
        achieved_sumrate=float(trace[-1]),
        iterations_used=int(trace.size),
        sumrate_trace=trace,
    )


def measure_gap(
    h: np.ndarray,
    config: NetworkConfig,
    candidate: Precoder,
    reference_budget: int,
    restarts: int = 8,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Estimated suboptimality gap of a candidate precoder.

    Reference value: best sumrate over one high-budget MRT-initialized solve
    plus `restarts` random restarts at the same budget.  Upper-bounds the
    candidate's gap only up to the reference solver's own suboptimality.
    """
    if reference_budget < 1:
        raise ValueError("reference budget must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    ref_cfg = OracleConfig(max_iterations=reference_budget, init_strategy="mrt")
    best = wmmse_solve(h, config, ref_cfg).achieved_sumrate
    rand_cfg = OracleConfig(max_iterations=reference_budget, init_strategy="random")
    for _ in range(restarts):
        report = wmmse_solve(h, config, rand_cfg, rng=rng)
        if report.achieved_sumrate > best:
            best = report.achieved_sumrate
    achieved = sumrate(candidate, h, config).value
    return max(0.0, best - achieved)
