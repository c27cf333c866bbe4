"""IRS parametrizations: the tunable vector, its feasible box, and the map to
per-element complex reflection coefficients.

Three kinds are supported:

* ``ideal_phase``     -- one phase per element, unit amplitude.
* ``phase_amplitude`` -- a phase and an amplitude per element (vector is the
  phases followed by the amplitudes, so its dimension is twice the element
  count).
* ``varactor``        -- one coupling capacitance per element, in picofarads;
  phase and amplitude are jointly determined by an equivalent-circuit model,
  so they cannot be tuned independently.

Iterates of the outer optimizer always live in the feasible box.  Probe
points may leave it: phases are physically meaningful for any real value, so
they are evaluated as-is, while amplitude-like coordinates (amplitudes,
capacitances) are clamped to their physical range and the number of clamped
entries is counted so it can be surfaced as a metric.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError

__all__ = [
    "VaractorCircuit",
    "IrsParams",
    "irs_reflection",
    "reflection_and_clamps",
    "PARAM_KINDS",
]

PARAM_KINDS = ("ideal_phase", "phase_amplitude", "varactor")

TWO_PI = 2.0 * np.pi


@dataclass
class VaractorCircuit:
    """Equivalent circuit of one varactor-tuned element.

    The element is modeled as a series R-L-C branch (loss resistance, bottom
    inductance, tunable capacitance) in parallel with a top-layer inductance;
    the reflection coefficient is (Z - Z0)/(Z + Z0) against the impedance of
    free space.  The defaults give a monotone reflection phase spanning about
    348 degrees over [0.5, 6] pF at 2.4 GHz, with amplitude dipping to ~0.59
    near resonance.
    """

    top_inductance: float = 1.8e-9
    bottom_inductance: float = 0.5e-9
    loss_resistance: float = 0.5
    frequency_hz: float = 2.4e9
    intrinsic_impedance: float = 377.0
    c_min_pf: float = 0.5
    c_max_pf: float = 6.0

    def __post_init__(self):
        if not 0 < self.c_min_pf < self.c_max_pf:
            raise ConfigError("need 0 < c_min_pf < c_max_pf")
        if self.loss_resistance < 0:
            raise ConfigError("loss_resistance must be >= 0")

    def reflection(self, cap_pf: np.ndarray) -> np.ndarray:
        """Reflection coefficient for capacitances given in picofarads."""
        w = TWO_PI * self.frequency_hz
        cap = np.asarray(cap_pf, dtype=float) * 1e-12
        z_branch = self.loss_resistance + 1j * w * self.bottom_inductance + 1.0 / (1j * w * cap)
        z_top = 1j * w * self.top_inductance
        z = z_top * z_branch / (z_top + z_branch)
        z0 = self.intrinsic_impedance
        return (z - z0) / (z + z0)

    def phase_midpoint_pf(self, grid_points: int = 1201) -> float:
        """Capacitance whose reflection phase sits halfway across the span.

        The phase response is steep near resonance and nearly flat at the
        range edges; starting every element here keeps the tuning signal
        alive, whereas the arithmetic mid-range can be a dead zone.
        """
        grid = np.linspace(self.c_min_pf, self.c_max_pf, grid_points)
        phase = np.unwrap(np.angle(self.reflection(grid)))
        target = phase[0] + 0.5 * (phase[-1] - phase[0])
        return float(grid[int(np.argmin(np.abs(phase - target)))])


@dataclass
class IrsParams:
    """The long-term decision vector together with its feasible box."""

    theta: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    kind: str = "ideal_phase"
    circuit: VaractorCircuit | None = None
    num_elements: int = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        if self.kind not in PARAM_KINDS:
            raise ConfigError(f"unknown parametrization {self.kind!r}")
        if not (self.theta.shape == self.lower.shape == self.upper.shape):
            raise ConfigError("theta and bounds must share one shape")
        if np.any(self.lower > self.upper):
            raise ConfigError("lower bound exceeds upper bound")
        if self.kind == "varactor" and self.circuit is None:
            self.circuit = VaractorCircuit()
        if self.num_elements == 0:
            dim = self.theta.size
            self.num_elements = dim // 2 if self.kind == "phase_amplitude" else dim
        expected = 2 * self.num_elements if self.kind == "phase_amplitude" else self.num_elements
        if self.theta.size != expected:
            raise ConfigError(
                f"{self.kind} needs a parameter vector of length {expected}, got {self.theta.size}"
            )

    # -- constructors -------------------------------------------------------

    @classmethod
    def ideal_phase(cls, num_elements: int, theta: np.ndarray | None = None) -> "IrsParams":
        lo = np.full(num_elements, -TWO_PI)
        hi = np.full(num_elements, TWO_PI)
        th = np.zeros(num_elements) if theta is None else theta
        return cls(th, lo, hi, kind="ideal_phase", num_elements=num_elements)

    @classmethod
    def phase_amplitude(cls, num_elements: int, theta: np.ndarray | None = None) -> "IrsParams":
        lo = np.concatenate([np.full(num_elements, -TWO_PI), np.zeros(num_elements)])
        hi = np.concatenate([np.full(num_elements, TWO_PI), np.ones(num_elements)])
        if theta is None:
            theta = np.concatenate([np.zeros(num_elements), np.ones(num_elements)])
        return cls(theta, lo, hi, kind="phase_amplitude", num_elements=num_elements)

    @classmethod
    def varactor(
        cls,
        num_elements: int,
        circuit: VaractorCircuit | None = None,
        theta: np.ndarray | None = None,
    ) -> "IrsParams":
        circuit = circuit or VaractorCircuit()
        lo = np.full(num_elements, circuit.c_min_pf)
        hi = np.full(num_elements, circuit.c_max_pf)
        if theta is None:
            theta = np.full(num_elements, circuit.phase_midpoint_pf())
        return cls(theta, lo, hi, kind="varactor", circuit=circuit, num_elements=num_elements)

    # -- feasibility --------------------------------------------------------

    def is_feasible(self, theta: np.ndarray | None = None) -> bool:
        th = self.theta if theta is None else np.asarray(theta, dtype=float)
        return bool(np.all(th >= self.lower) and np.all(th <= self.upper))

    def clip(self, theta: np.ndarray) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def with_theta(self, theta: np.ndarray) -> "IrsParams":
        return IrsParams(
            np.asarray(theta, dtype=float),
            self.lower,
            self.upper,
            kind=self.kind,
            circuit=self.circuit,
            num_elements=self.num_elements,
        )

    def random_feasible(self, rng: np.random.Generator) -> "IrsParams":
        theta = rng.uniform(self.lower, self.upper)
        return self.with_theta(theta)


def reflection_and_clamps(params: IrsParams) -> tuple[np.ndarray, int]:
    """Per-element reflection coefficients plus the number of clamped coordinates.

    Phases are accepted for any real value.  Amplitudes and capacitances are
    clamped to their physical range; the clamp count lets callers surface how
    often probe points exit the box.
    """
    theta = params.theta
    if params.kind == "ideal_phase":
        return np.exp(1j * theta), 0
    if params.kind == "phase_amplitude":
        n = params.num_elements
        phases = theta[:n]
        amps = theta[n:]
        clamped = np.clip(amps, 0.0, 1.0)
        n_clamped = int(np.sum(clamped != amps))
        return clamped * np.exp(1j * phases), n_clamped
    # varactor
    circ = params.circuit
    clamped = np.clip(theta, circ.c_min_pf, circ.c_max_pf)
    n_clamped = int(np.sum(clamped != theta))
    return circ.reflection(clamped), n_clamped


def irs_reflection(params: IrsParams) -> np.ndarray:
    """Complex reflection coefficients gamma, one per IRS element."""
    gamma, _ = reflection_and_clamps(params)
    return gamma
