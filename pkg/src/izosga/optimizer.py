"""Outer loop: projected zeroth-order stochastic quasi-gradient ascent.

Each outer iteration t draws a state of nature, solves the short-term
precoding problem with a budgeted WMMSE call, probes the channel at
theta +/- mu*U with the same draw, assembles the quasi-gradient, and takes a
projected ascent step on the IRS parameters.  Budget schedules, the iterate
return rule, and the seed-stream layout live here.

Randomness is split into independent streams per replication so that
ablating one source (say the probe directions) never perturbs another:
omega draws, probes, the uniform iterate draw, initialization, geometry,
and gap-measurement restarts each own a stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .channel import OmegaSampler, effective_channel
from .config import NetworkConfig
from .diagnostics import ErrorLedger, track_epsilon_bar
from .reflection import IrsParams
from .sumrate import cogradient
from .wmmse import OracleConfig, measure_gap, wmmse_solve
from .zo_gradient import channel_probe_pair, quasi_gradient

__all__ = [
    "SeedBundle",
    "BudgetSchedule",
    "IzosgaConfig",
    "IterateRecord",
    "RunResult",
    "schedule_eval",
    "project_theta",
    "tolerance_parameters",
    "run",
]

RETURN_RULES = ("final", "uniform", "best")

# seed-stream identifiers; one SeedSequence spawn key per (replication, stream)
OMEGA_STREAM = 0
PROBE_STREAM = 1
TSTAR_STREAM = 2
INIT_STREAM = 3
GEOMETRY_STREAM = 4
GAP_STREAM = 5
THETA0_STREAM = 6


@dataclass
class SeedBundle:
    """Master seed plus replication index, fanned out into named streams."""

    master: int
    replication: int = 0

    def sequence(self, stream_id: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            self.master, spawn_key=(self.replication, stream_id)
        )

    def generator(self, stream_id: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(stream_id))


@dataclass
class BudgetSchedule:
    """Piecewise-constant WMMSE budget: values[min(t // period, last)]."""

    values: tuple
    period: int

    def __post_init__(self):
        self.values = tuple(int(v) for v in self.values)
        if not self.values or any(v < 1 for v in self.values):
            raise ValueError("schedule values must be positive integers")
        if self.period < 1:
            raise ValueError("schedule period must be positive")


Schedule = Union[int, BudgetSchedule, Sequence[int]]


def schedule_eval(schedule: Schedule, t: int) -> int:
    """WMMSE budget for outer iteration t."""
    if t < 0:
        raise IndexError("schedule undefined for negative iterations")
    if isinstance(schedule, (int, np.integer)):
        if schedule < 1:
            raise ValueError("constant budget must be positive")
        return int(schedule)
    if isinstance(schedule, BudgetSchedule):
        return schedule.values[min(t // schedule.period, len(schedule.values) - 1)]
    seq = schedule
    if t >= len(seq):
        raise IndexError("schedule undefined at iteration %d" % t)
    budget = int(seq[t])
    if budget < 1:
        raise ValueError("schedule budgets must be positive")
    return budget


@dataclass
class IzosgaConfig:
    """Outer-loop parameters.

    step_size 0 turns the optimizer into a fixed-theta evaluator (the
    random-parameter baselines); probes are skipped entirely in that case.
    """

    step_size: float = 0.01
    smoothing: float = 0.05
    horizon: int = 5000
    wmmse_schedule: Schedule = 10
    return_rule: str = "final"
    batch_probes: int = 1
    step_decay: bool = False
    warm_start: bool = False
    store_theta: bool = True
    gap_cadence: int = 0  # 0 disables gap measurement
    gap_reference_budget: int = 200

    def __post_init__(self):
        if self.step_size < 0:
            raise ValueError("step size must be >= 0")
        if self.smoothing <= 0:
            raise ValueError("smoothing must be positive")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.return_rule not in RETURN_RULES:
            raise ValueError("return rule must be one of %s" % (RETURN_RULES,))
        if self.batch_probes < 1:
            raise ValueError("batch_probes must be >= 1")
        if self.gap_cadence < 0:
            raise ValueError("gap cadence must be >= 0")


@dataclass
class IterateRecord:
    t: int
    theta_norm: float
    sumrate: float
    wmmse_iters: int
    clamp_events: int
    gap_estimate: Optional[float] = None
    theta: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class RunResult:
    theta_out: np.ndarray
    trace: list
    t_star: int
    return_rule: str
    params_out: IrsParams
    ledger: Optional[ErrorLedger] = None


def project_theta(theta: np.ndarray, space: IrsParams) -> np.ndarray:
    """Euclidean projection onto the feasible box (per-coordinate clamp)."""
    return np.clip(np.asarray(theta, dtype=float), space.lower, space.upper)


def tolerance_parameters(
    num_params: int, channel_dim: int, epsilon: float, c_horizon: float = 1.0,
    c_smoothing: float = 1.0,
) -> tuple[int, float]:
    """Horizon and smoothing from the convergence-rate scalings.

    T = ceil(c_horizon * sqrt(num_params) / epsilon^4) and
    mu = c_smoothing / sqrt(channel_dim * T).
    """
    if epsilon <= 0:
        raise ValueError("tolerance must be positive")
    horizon = int(math.ceil(c_horizon * math.sqrt(num_params) * epsilon ** -4))
    mu = c_smoothing / math.sqrt(channel_dim * horizon)
    return horizon, mu


def run(
    config: NetworkConfig,
    opt: IzosgaConfig,
    oracle_cfg: OracleConfig,
    seeds: SeedBundle,
    params: Optional[IrsParams] = None,
) -> RunResult:
    """Execute horizon+1 outer iterations and return the selected iterate.

    params supplies theta_0 and the parametrization; default is ideal phases
    at zero.  The ascent step is taken for t < horizon only, so the last
    recorded iterate is also the last one evaluated; "final" returns it,
    "uniform" returns theta at a pre-drawn t* ~ U{0..horizon}, "best" the
    recorded iterate with the highest single-draw sumrate.
    """
    if params is None:
        params = IrsParams.ideal_phase(config.num_irs_elements)
    if params.num_elements != config.num_irs_elements:
        raise ValueError("IRS parameter count does not match the config")
    if not params.is_feasible():
        raise ValueError("theta_0 must lie in the feasible box")

    horizon = opt.horizon
    dim = params.theta.size
    sampler = OmegaSampler(
        config, seeds.master, prefix=(seeds.replication, OMEGA_STREAM)
    )
    probe_rng = seeds.generator(PROBE_STREAM)
    init_rng = seeds.generator(INIT_STREAM)
    gap_rng = seeds.generator(GAP_STREAM)
    t_star = int(seeds.generator(TSTAR_STREAM).integers(0, horizon + 1))

    ledger = ErrorLedger(cadence=opt.gap_cadence) if opt.gap_cadence > 0 else None
    trace: list[IterateRecord] = []
    theta_star = params.theta.copy()
    best_theta = params.theta.copy()
    best_value = -np.inf
    prev_precoder = None

    for t in range(horizon + 1):
        omega = sampler.draw(t)
        h = effective_channel(params, omega)
        budget = schedule_eval(opt.wmmse_schedule, t)
        step_cfg = OracleConfig(
            max_iterations=budget,
            objective_tolerance=oracle_cfg.objective_tolerance,
            init_strategy=oracle_cfg.init_strategy,
        )
        warm = prev_precoder if opt.warm_start else None
        report = wmmse_solve(h, config, step_cfg, warm_start=warm, rng=init_rng)
        prev_precoder = report.precoder

        gap = None
        if ledger is not None and t % opt.gap_cadence == 0:
            gap = measure_gap(
                h, config, report.precoder, opt.gap_reference_budget, rng=gap_rng
            )
            track_epsilon_bar(ledger, gap, t)

        clamps = 0
        if opt.step_size > 0 and t < horizon:
            g = cogradient(report.precoder, h, config)
            d = np.zeros(dim)
            for _ in range(opt.batch_probes):
                u = probe_rng.standard_normal(dim)
                pair = channel_probe_pair(params, omega, u, opt.smoothing)
                clamps += pair.clamp_events
                d += quasi_gradient(pair.plus, pair.minus, u, opt.smoothing, g)
            d /= opt.batch_probes
            if not np.all(np.isfinite(d)):
                raise RuntimeError("non-finite quasi-gradient at iteration %d" % t)
            eta = opt.step_size / math.sqrt(t + 1.0) if opt.step_decay else opt.step_size
            next_theta = project_theta(params.theta + eta * d, params)
        else:
            next_theta = params.theta

        trace.append(
            IterateRecord(
                t=t,
                theta_norm=float(np.linalg.norm(params.theta)),
                sumrate=report.achieved_sumrate,
                wmmse_iters=report.iterations_used,
                clamp_events=clamps,
                gap_estimate=gap,
                theta=params.theta.copy() if opt.store_theta else None,
            )
        )
        if t == t_star:
            theta_star = params.theta.copy()
        if report.achieved_sumrate > best_value:
            best_value = report.achieved_sumrate
            best_theta = params.theta.copy()
        params = params.with_theta(next_theta)

    if opt.return_rule == "uniform":
        theta_out = theta_star
    elif opt.return_rule == "best":
        theta_out = best_theta
    else:
        theta_out = params.theta.copy()
    return RunResult(
        theta_out=theta_out,
        trace=trace,
        t_star=t_star,
        return_rule=opt.return_rule,
        params_out=params.with_theta(theta_out),
        ledger=ledger,
    )
