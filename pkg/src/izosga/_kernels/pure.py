"""Reference numpy implementations of the numerical hot paths.

Three routines dominate the runtime of a full experiment: the weighted
sumrate (with per-user SINR), the analytic co-gradient of the sumrate with
respect to the stacked channel, and the WMMSE block-coordinate sweeps.  They
are implemented here on plain arrays (complex128 matrices, float64 vectors)
and mirrored one-for-one by the compiled backend in ``_core.pyx``; the two
must stay interchangeable.

Conventions shared by both backends:
  - channels ``h`` are (M, K) with column k the effective channel of user k,
  - precoders ``w`` are (M, K) with column k the beamformer of user k,
  - ``t = h^H w`` so ``t[k, j] = h_k^H w_j``; interference sums zero the
    diagonal of ``|t|^2`` instead of subtracting it (no cancellation),
  - the co-gradient g satisfies dF = 2 Re(g^H dh) per column.
"""
from __future__ import annotations

import numpy as np

LN2 = float(np.log(2.0))

# below this, signal power is treated as exactly zero (keeps SINR and the
# gradient finite when a beam is numerically orthogonal to its user)
TINY_SIGNAL = float(np.finfo(np.float64).tiny)

BISECTION_STEPS = 60
MAX_BRACKET_GROWTH = 200


def _link_powers(h: np.ndarray, w: np.ndarray, noise: np.ndarray):
    """Common front end: t = h^H w, signal powers, interference-plus-noise."""
    t = h.conj().T @ w
    p = np.abs(t) ** 2
    sig = np.diagonal(p).copy()
    off = p.copy()
    np.fill_diagonal(off, 0.0)
    inter = noise + off.sum(axis=1)
    return t, sig, inter


def sumrate_and_sinr(
    h: np.ndarray, w: np.ndarray, noise: np.ndarray, weights: np.ndarray
) -> tuple[float, np.ndarray]:
    """Weighted sumrate (bps/Hz) and the per-user SINR vector."""
    _, sig, inter = _link_powers(h, w, noise)
    sinr = np.where(sig < TINY_SIGNAL, 0.0, sig / inter)
    return float(np.dot(weights, np.log1p(sinr)) / LN2), sinr


def cogradient(
    h: np.ndarray, w: np.ndarray, noise: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """Co-gradient of the weighted sumrate wrt h, columnwise.

    Column k is d(weighted sumrate)/d(conj h_k) in the convention
    dF = 2 Re(g_k^H dh_k); only rate k depends on h_k.
    """
    t, sig, inter = _link_powers(h, w, noise)
    den = inter + sig
    wt = w @ t.conj().T  # column k: sum_j w_j conj(t[k, j])
    sig_term = np.conj(np.diagonal(t))[None, :] * w
    return (weights / LN2)[None, :] * (wt / den[None, :] - (wt - sig_term) / inter[None, :])


def _power_multiplier(evals: np.ndarray, row_power: np.ndarray, budget: float) -> float:
    """Lagrange multiplier of the power constraint via bisection.

    Solves sum_m row_power[m]/(evals[m] + mu)^2 = budget for mu >= 0, with
    mu = 0 when the unconstrained solution already fits.  evals >= 0.
    """

    active = row_power > 0.0
    rp = row_power[active]
    ev = evals[active]

    def load(mu: float) -> float:
        return float(np.sum(rp / (ev + mu) ** 2))

    if np.all(ev > 0.0) and load(0.0) <= budget:
        return 0.0
    hi = max(np.sqrt(float(rp.sum()) / budget), TINY_SIGNAL)
    grown = 0
    while load(hi) > budget:
        hi *= 2.0
        grown += 1
        if grown > MAX_BRACKET_GROWTH:
            raise ValueError("power multiplier search failed to bracket a root")
    lo = 0.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if load(mid) > budget:
            lo = mid
        else:
            hi = mid
    return hi


def wmmse_sweeps(
    h: np.ndarray,
    w0: np.ndarray,
    noise: np.ndarray,
    weights: np.ndarray,
    power: float,
    max_sweeps: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Run up to max_sweeps full (u, lambda, W) WMMSE sweeps from w0.

    Returns the final precoder and the per-sweep sumrate trace (one entry per
    executed sweep).  Early-stops when the relative sumrate improvement drops
    below tol (tol = 0 disables).  The precoder update solves the weighted
    least-squares problem with the power constraint enforced through a scalar
    multiplier found by bisection, via the eigendecomposition of the
    interference-plus-signal matrix.
    """
    w = w0.copy()
    trace = np.empty(max_sweeps)
    prev = -np.inf
    used = 0
    for it in range(max_sweeps):
        t, sig, inter = _link_powers(h, w, noise)
        den = inter + sig
        a = np.diagonal(t)
        u = a.conj() / den
        lam = weights * den / inter
        quad = lam * np.abs(u) ** 2
        gram = (h * quad[None, :]) @ h.conj().T
        gram = 0.5 * (gram + gram.conj().T)
        rhs = h * (lam * u.conj())[None, :]
        evals, q = np.linalg.eigh(gram)
        evals = np.maximum(evals, 0.0)
        rhs_rot = q.conj().T @ rhs
        row_power = (np.abs(rhs_rot) ** 2).sum(axis=1)
        if row_power.sum() <= 0.0:
            w = np.zeros_like(w)
        else:
            mu = _power_multiplier(evals, row_power, power)
            # rows with zero eigenvalue and mu = 0 carry zero power; skip them
            # instead of dividing 0/0
            denom = evals + mu
            inv = np.divide(1.0, denom, out=np.zeros_like(denom), where=denom > 0.0)
            w = q @ (rhs_rot * inv[:, None])
            norm2 = float(np.sum(np.abs(w) ** 2))
            if norm2 > power:
                w *= np.sqrt(power / norm2)
        value, _ = sumrate_and_sinr(h, w, noise, weights)
        trace[it] = value
        used = it + 1
        if tol > 0.0 and it > 0 and value - prev <= tol * max(abs(prev), TINY_SIGNAL):
            break
        prev = value
    return w, trace[:used]
