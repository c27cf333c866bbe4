# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled mirror of the pure-numpy kernels.

Same contract as pure.py: sumrate_and_sinr, cogradient, wmmse_sweeps on
C-contiguous complex128/float64 arrays.  Loops are explicit because the
matrices are tiny (M, K of order 10) and per-call numpy overhead dominates
the pure backend at experiment scale.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log1p, sqrt
from scipy.linalg.cython_lapack cimport zheevd

cnp.import_array()

cdef double LN2 = 0.6931471805599453
cdef double TINY = 2.2250738585072014e-308  # smallest normal double
cdef int BISECT = 60
cdef int MAX_GROW = 200


cdef void _front(const double complex[:, ::1] h, const double complex[:, ::1] w,
                 const double[::1] noise,
                 double complex[:, ::1] t, double[::1] sig, double[::1] inter) noexcept nogil:
    # t[i, j] = h_i^H w_j; sig[i] = |t[i, i]|^2;
    # inter[i] = noise[i] + off-diagonal row power
    cdef Py_ssize_t m = h.shape[0], k = h.shape[1]
    cdef Py_ssize_t i, j, mm
    cdef double complex acc
    cdef double p
    for i in range(k):
        for j in range(k):
            acc = 0
            for mm in range(m):
                acc = acc + h[mm, i].conjugate() * w[mm, j]
            t[i, j] = acc
    for i in range(k):
        sig[i] = 0.0
        inter[i] = noise[i]
        for j in range(k):
            p = t[i, j].real * t[i, j].real + t[i, j].imag * t[i, j].imag
            if j == i:
                sig[i] = p
            else:
                inter[i] = inter[i] + p


def sumrate_and_sinr(const double complex[:, ::1] h, const double complex[:, ::1] w,
                     const double[::1] noise, const double[::1] weights):
    """Weighted sumrate (bps/Hz) and the per-user SINR vector."""
    cdef Py_ssize_t k = h.shape[1]
    t_arr = np.empty((k, k), dtype=np.complex128)
    sinr_arr = np.empty(k)
    sig_arr = np.empty(k)
    inter_arr = np.empty(k)
    cdef double complex[:, ::1] t = t_arr
    cdef double[::1] sinr = sinr_arr, sig = sig_arr, inter = inter_arr
    cdef double val = 0.0
    cdef Py_ssize_t i
    _front(h, w, noise, t, sig, inter)
    for i in range(k):
        if sig[i] < TINY:
            sinr[i] = 0.0
        else:
            sinr[i] = sig[i] / inter[i]
        val += weights[i] * log1p(sinr[i])
    return val / LN2, sinr_arr


def cogradient(const double complex[:, ::1] h, const double complex[:, ::1] w,
               const double[::1] noise, const double[::1] weights):
    """Columnwise co-gradient of the weighted sumrate wrt h (see pure.py)."""
    cdef Py_ssize_t m = h.shape[0], k = h.shape[1]
    t_arr = np.empty((k, k), dtype=np.complex128)
    sig_arr = np.empty(k)
    inter_arr = np.empty(k)
    g_arr = np.empty((m, k), dtype=np.complex128)
    cdef double complex[:, ::1] t = t_arr
    cdef double[::1] sig = sig_arr, inter = inter_arr
    cdef double complex[:, ::1] g = g_arr
    cdef Py_ssize_t i, j, mm
    cdef double den, cw
    cdef double complex acc, aconj
    _front(h, w, noise, t, sig, inter)
    for i in range(k):
        den = inter[i] + sig[i]
        cw = weights[i] / LN2
        aconj = t[i, i].conjugate()
        for mm in range(m):
            acc = 0
            for j in range(k):
                acc = acc + w[mm, j] * t[i, j].conjugate()
            g[mm, i] = cw * (acc / den - (acc - aconj * w[mm, i]) / inter[i])
    return g_arr


cdef double _load(const double[::1] evals, const double[::1] row_power,
                  Py_ssize_t m, double mu) noexcept nogil:
    cdef double total = 0.0, d
    cdef Py_ssize_t i
    for i in range(m):
        if row_power[i] > 0.0:
            d = evals[i] + mu
            total += row_power[i] / (d * d)
    return total


def wmmse_sweeps(const double complex[:, ::1] h, const double complex[:, ::1] w0,
                 const double[::1] noise, const double[::1] weights,
                 double power, int max_sweeps, double tol):
    """WMMSE block sweeps; mirrors pure.wmmse_sweeps exactly."""
    cdef Py_ssize_t m = h.shape[0], k = h.shape[1]
    cdef int n = <int> m, lda = <int> m, info = 0
    cdef int lwork = 2 * n + n * n
    cdef int lrwork = 1 + 5 * n + 2 * n * n
    cdef int liwork = 3 + 5 * n
    cdef char jobz = b'V', uplo = b'L'

    w_arr = np.asarray(w0).copy()
    trace_arr = np.empty(max_sweeps)
    t_arr = np.empty((k, k), dtype=np.complex128)
    sig_arr = np.empty(k)
    inter_arr = np.empty(k)
    lamu_arr = np.empty(k, dtype=np.complex128)  # lam_i * conj(u_i)
    quad_arr = np.empty(k)
    gram_arr = np.empty(m * m, dtype=np.complex128)  # column-major for LAPACK
    evals_arr = np.empty(m)
    rrot_arr = np.empty((m, k), dtype=np.complex128)
    rpow_arr = np.empty(m)
    work_arr = np.empty(lwork, dtype=np.complex128)
    rwork_arr = np.empty(lrwork)
    iwork_arr = np.empty(liwork, dtype=np.int32)

    cdef double complex[:, ::1] w = w_arr, t = t_arr, rrot = rrot_arr
    cdef double[::1] trace = trace_arr, sig = sig_arr, inter = inter_arr
    cdef double[::1] quad = quad_arr, evals = evals_arr, rpow = rpow_arr
    cdef double[::1] rwork = rwork_arr
    cdef double complex[::1] lamu = lamu_arr, gram = gram_arr, work = work_arr
    cdef int[::1] iwork = iwork_arr

    cdef Py_ssize_t i, j, mm, p
    cdef int it, used = 0, grown
    cdef double den, lam, umag2, total, mu, hi, lo, mid, norm2, scale, value, prev
    cdef double complex uconj, acc
    cdef bint unconstrained

    prev = -np.inf
    for it in range(max_sweeps):
        _front(h, w, noise, t, sig, inter)
        for i in range(k):
            den = inter[i] + sig[i]
            lam = weights[i] * den / inter[i]
            uconj = t[i, i] / den  # conj of the receive coefficient
            umag2 = (uconj.real * uconj.real + uconj.imag * uconj.imag)
            quad[i] = lam * umag2
            lamu[i] = lam * uconj
        # gram = h diag(quad) h^H stored column-major (lower triangle used)
        for j in range(m):
            for p in range(m):
                acc = 0
                for i in range(k):
                    acc = acc + quad[i] * h[p, i] * h[j, i].conjugate()
                gram[j * m + p] = acc
        zheevd(&jobz, &uplo, &n, &gram[0], &lda, &evals[0], &work[0], &lwork,
               &rwork[0], &lrwork, &iwork[0], &liwork, &info)
        if info != 0:
            raise ValueError(
                "eigendecomposition failed in the precoder update (info=%d)" % info)
        for mm in range(m):
            if evals[mm] < 0.0:
                evals[mm] = 0.0
        # rrot[mm, i] = q_mm^H (lamu_i * h_col_i); q columns live in gram
        total = 0.0
        for mm in range(m):
            rpow[mm] = 0.0
            for i in range(k):
                acc = 0
                for p in range(m):
                    acc = acc + gram[mm * m + p].conjugate() * h[p, i]
                acc = acc * lamu[i]
                rrot[mm, i] = acc
                rpow[mm] += acc.real * acc.real + acc.imag * acc.imag
            total += rpow[mm]
        if total <= 0.0:
            for p in range(m):
                for i in range(k):
                    w[p, i] = 0
        else:
            unconstrained = True
            for mm in range(m):
                if rpow[mm] > 0.0 and evals[mm] <= 0.0:
                    unconstrained = False
                    break
            if unconstrained and _load(evals, rpow, m, 0.0) <= power:
                mu = 0.0
            else:
                hi = sqrt(total / power)
                if hi < TINY:
                    hi = TINY
                grown = 0
                while _load(evals, rpow, m, hi) > power:
                    hi *= 2.0
                    grown += 1
                    if grown > MAX_GROW:
                        raise ValueError(
                            "power multiplier search failed to bracket a root")
                lo = 0.0
                for j in range(BISECT):
                    mid = 0.5 * (lo + hi)
                    if _load(evals, rpow, m, mid) > power:
                        lo = mid
                    else:
                        hi = mid
                mu = hi
            # rows with zero eigenvalue and mu = 0 carry zero power; skip them
            # instead of dividing 0/0
            for mm in range(m):
                if evals[mm] + mu > 0.0:
                    rpow[mm] = 1.0 / (evals[mm] + mu)
                else:
                    rpow[mm] = 0.0
            norm2 = 0.0
            for p in range(m):
                for i in range(k):
                    acc = 0
                    for mm in range(m):
                        acc = acc + gram[mm * m + p] * (rrot[mm, i] * rpow[mm])
                    w[p, i] = acc
                    norm2 += acc.real * acc.real + acc.imag * acc.imag
            if norm2 > power:
                scale = sqrt(power / norm2)
                for p in range(m):
                    for i in range(k):
                        w[p, i] = w[p, i] * scale
        value, _ = sumrate_and_sinr(h, w_arr, noise, weights)
        trace[it] = value
        used = it + 1
        if tol > 0.0 and it > 0 and value - prev <= tol * max(abs(prev), TINY):
            break
        prev = value
    return w_arr, trace_arr[:used]
