"""Two-point zeroth-order quasi-gradient through the channel map.

Per outer iteration the channel is probed at theta + mu*U and theta - mu*U
with the SAME state of nature; combined with the analytic co-gradient of the
sumrate at the center point, the finite difference collapses to a rank-one
estimate

    D = 2 * Re(g^H delta) * U,   delta = (H(theta+muU) - H(theta-muU))/(2mu)

which is always collinear with U.  The factor 2 is owned here and nowhere
else; it is the constant that makes E[D] the gradient of the Gaussian-
smoothed objective under the dF = 2 Re(g^H dz) convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import StateOfNature, effective_from_gamma
from .reflection import IrsParams, reflection_and_clamps
from .sumrate import stack_channel

__all__ = ["ProbePair", "draw_probe", "channel_probe_pair", "quasi_gradient"]


@dataclass
class ProbePair:
    """Channel evaluations at theta +/- mu*U, sharing one state of nature."""

    plus: np.ndarray  # (M, K)
    minus: np.ndarray  # (M, K)
    clamp_events: int
    seed_tag: int


def draw_probe(rng: np.random.Generator, dim: int) -> np.ndarray:
    """One probe direction U ~ N(0, I_dim) from the dedicated probe stream."""
    return rng.standard_normal(dim)


def channel_probe_pair(
    params: IrsParams, omega: StateOfNature, u: np.ndarray, mu: float
) -> ProbePair:
    """Evaluate the channel at the two probe points.

    Probe points are NOT projected back into the feasible box; phases are
    meaningful for any real value and amplitude-like coordinates are clamped
    inside the reflection map, with the clamp count reported here.
    """
    if mu <= 0:
        raise ValueError("smoothing parameter must be positive")
    u = np.asarray(u, dtype=float)
    if u.shape != params.theta.shape:
        raise ValueError("probe direction does not match the parameter dimension")
    clamps = 0
    probes = []
    for sign in (1.0, -1.0):
        shifted = params.with_theta(params.theta + sign * mu * u)
        gamma, n_clamped = reflection_and_clamps(shifted)
        clamps += n_clamped
        probes.append(effective_from_gamma(gamma, omega))
    return ProbePair(
        plus=probes[0], minus=probes[1], clamp_events=clamps, seed_tag=omega.seed_tag
    )


def quasi_gradient(
    probe_plus: np.ndarray,
    probe_minus: np.ndarray,
    u: np.ndarray,
    mu: float,
    g: np.ndarray,
) -> np.ndarray:
    """Assemble the sample quasi-gradient D from two probes and the co-gradient.

    probe_plus/probe_minus are (M, K) channels (or already-stacked vectors);
    g is the stacked co-gradient at the center point.  Returns a real vector
    collinear with u.
    """
    if mu <= 0:
        raise ValueError("smoothing parameter must be positive")
    delta = (stack_channel(probe_plus) - stack_channel(probe_minus)) / (2.0 * mu)
    g = np.asarray(g).ravel()
    if delta.shape != g.shape:
        raise ValueError("co-gradient and probe dimensions disagree")
    scale = 2.0 * (delta.real @ g.real + delta.imag @ g.imag)
    return scale * np.asarray(u, dtype=float)
