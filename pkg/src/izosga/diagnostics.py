"""Stationarity and oracle-error diagnostics.

Two instruments:

* Moreau-envelope gradient norm.  For envelope parameter lam, the norm of
  the envelope gradient at theta equals lam * ||theta - theta_hat|| where
  theta_hat solves the prox subproblem
      max_{theta' in box} f(theta') - (lam/2) ||theta - theta'||^2.
  The subproblem is made deterministic by freezing a common-random-number
  set of states of nature and solved by projected stochastic ascent: a
  zeroth-order estimate of grad f plus the analytic prox term.

* ErrorLedger: running average of measured oracle gaps (eps-bar), with a
  cadence so the expensive reference solves run only every n-th iteration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .channel import OmegaSampler, effective_channel
from .config import NetworkConfig
from .reflection import IrsParams
from .sumrate import cogradient
from .wmmse import OracleConfig, wmmse_solve
from .zo_gradient import channel_probe_pair, quasi_gradient

__all__ = [
    "MoreauConfig",
    "MoreauReport",
    "ErrorLedger",
    "DiagnosticsError",
    "prox_point",
    "moreau_grad_norm",
    "network_value_and_grad",
    "track_epsilon_bar",
]

MOREAU_STREAM_TAG = 900_000  # omega tags for the frozen diagnostic sample set


class DiagnosticsError(RuntimeError):
    """Prox subproblem failed to reach the requested tolerance."""


@dataclass
class MoreauConfig:
    envelope_lambda: float = 10.0
    prox_iterations: int = 120
    prox_step: float = 0.01
    sample_budget: int = 64  # frozen omega draws defining f-hat
    reference_budget: int = 50  # WMMSE budget for the near-exact inner solves
    smoothing: float = 1e-2  # mu of the internal ZO estimator
    tolerance: float = 0.0  # residual-gradient tolerance; 0 = do not signal

    def __post_init__(self):
        if self.envelope_lambda <= 0:
            raise ValueError("envelope parameter must be positive")
        if self.sample_budget < 1 or self.prox_iterations < 1:
            raise ValueError("prox budgets must be at least 1")


@dataclass
class MoreauReport:
    grad_norm: float
    theta_hat: np.ndarray
    residual_grad_norm: float
    envelope_lambda: float
    sample_budget: int
    prox_iterations: int


def prox_point(
    theta: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    lam: float,
    grad_fn: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    iterations: int,
    step: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Projected ascent on f(theta') - (lam/2)||theta - theta'||^2.

    grad_fn(theta', rng) estimates grad f at theta'; the prox term is exact.
    Returns the final point and the norm of the last full-objective gradient
    estimate, averaged over the tail third of the iterations to damp noise.
    """
    point = np.clip(np.asarray(theta, dtype=float), lower, upper)
    tail_from = iterations - max(1, iterations // 3)
    tail = []
    for it in range(iterations):
        grad = np.asarray(grad_fn(point, rng), dtype=float) - lam * (point - theta)
        if not np.all(np.isfinite(grad)):
            raise DiagnosticsError("non-finite gradient in the prox solve")
        point = np.clip(point + step * grad, lower, upper)
        if it >= tail_from:
            tail.append(float(np.linalg.norm(grad)))
    return point, float(np.mean(tail))


def network_value_and_grad(
    params: IrsParams,
    config: NetworkConfig,
    omegas: list,
    oracle_cfg: OracleConfig,
    mu: float,
):
    """ZO gradient estimator for f-hat, the CRN average of the network objective.

    Returns grad_fn(theta', rng): one shared probe direction per call; per
    frozen omega the inner problem is solved fresh at the center point, then
    the two probes reuse that co-gradient.  Samples are reduced in a fixed
    canonical order.
    """

    def grad_fn(theta_prime: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        center = params.with_theta(theta_prime)
        u = rng.standard_normal(theta_prime.shape[0])
        total = np.zeros(theta_prime.shape[0])
        for omega in omegas:
            h = np.ascontiguousarray(effective_channel(center, omega), dtype=np.complex128)
            report = wmmse_solve(h, config, oracle_cfg)
            g = cogradient(report.precoder, h, config)
            pair = channel_probe_pair(center, omega, u, mu)
            total += quasi_gradient(pair.plus, pair.minus, u, mu, g)
        return total / len(omegas)

    return grad_fn


def moreau_grad_norm(
    params: IrsParams,
    cfg: MoreauConfig,
    config: NetworkConfig,
    entropy,
    rng: Optional[np.random.Generator] = None,
    report: bool = False,
):
    """Estimate ||grad of the 1/lam Moreau envelope|| at params.theta.

    entropy seeds the frozen omega set (common random numbers); rng drives
    the probe directions of the prox solve (deterministic default).  Returns
    the scalar estimate, or the full MoreauReport when report=True.
    """
    if not params.is_feasible():
        raise ValueError("Moreau estimation expects a feasible point")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(entropy, spawn_key=(77,)))
    sampler = OmegaSampler(config, entropy, prefix=(MOREAU_STREAM_TAG,))
    omegas = [sampler.draw(i) for i in range(cfg.sample_budget)]
    oracle_cfg = OracleConfig(max_iterations=cfg.reference_budget, init_strategy="mrt")
    grad_fn = network_value_and_grad(params, config, omegas, oracle_cfg, cfg.smoothing)
    theta_hat, residual = prox_point(
        params.theta,
        params.lower,
        params.upper,
        cfg.envelope_lambda,
        grad_fn,
        cfg.prox_iterations,
        cfg.prox_step,
        rng,
    )
    if cfg.tolerance > 0 and residual > cfg.tolerance:
        raise DiagnosticsError(
            "prox solve residual %.3g above tolerance %.3g" % (residual, cfg.tolerance)
        )
    norm = cfg.envelope_lambda * float(np.linalg.norm(params.theta - theta_hat))
    if not report:
        return norm
    return MoreauReport(
        grad_norm=norm,
        theta_hat=theta_hat,
        residual_grad_norm=residual,
        envelope_lambda=cfg.envelope_lambda,
        sample_budget=cfg.sample_budget,
        prox_iterations=cfg.prox_iterations,
    )


@dataclass
class ErrorLedger:
    """Running mean of oracle-gap measurements taken every `cadence` iterations."""

    cadence: int = 1
    gaps: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    mean: float = 0.0

    def recomputed_mean(self) -> float:
        if not self.gaps:
            return 0.0
        return float(np.mean(self.gaps))

    def coverage(self, horizon: int) -> float:
        """Fraction of the horizon actually measured (cadence-aware flag)."""
        if horizon <= 0:
            return 1.0 if self.gaps else 0.0
        return len(self.gaps) / float(horizon)


def track_epsilon_bar(ledger: ErrorLedger, gap: float, t: int) -> ErrorLedger:
    """Append one measured gap and update the running mean exactly.

    The mean update is (n*m + g)/(n + 1); iterations that were skipped by
    the cadence simply never enter the ledger (coverage() exposes this).
    """
    if gap < 0:
        raise ValueError("oracle gaps are nonnegative by definition")
    n = len(ledger.gaps)
    ledger.mean = (n * ledger.mean + gap) / (n + 1)
    ledger.gaps.append(float(gap))
    ledger.iterations.append(int(t))
    return ledger
