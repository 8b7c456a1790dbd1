# cython: language_level=3
# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled per-round kernels for the online forecasters.

Hot loops only: the ridge forecaster keeps a Sherman-Morrison-updated inverse
(O(d^2) per round); the pseudoinverse-based forecasters run one LAPACK dsyev
per round. Semantics must match regretlab._pykernels.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t
from scipy.linalg.cython_lapack cimport dsyev

cnp.import_array()

NAME = "compiled"

cdef double RCOND = 1e-12  # keep in sync with regretlab.linalg.RANK_RCOND


cdef inline int _eigh_inplace(double[:, ::1] A, double[::1] w,
                              double[::1] work, int d, int lwork) noexcept nogil:
    # Overwrites A; afterwards C-row k of A holds eigenvector k, w ascending.
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef int info = 0
    dsyev(&jobz, &uplo, &d, &A[0, 0], &d, &w[0], &work[0], &lwork, &info)
    return info


def vaw_run(const double[:, ::1] xs, const double[::1] ys, double lam):
    """Sherman-Morrison fast path for the invertible ridge forecaster."""
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    cdef Py_ssize_t T = xs.shape[0]
    cdef int d = <int> xs.shape[1]
    yhat_arr = np.empty(T)
    Minv_arr = np.eye(d) / lam
    b_arr = np.zeros(d)
    w_arr = np.zeros(d)
    cdef double[::1] yhat = yhat_arr
    cdef double[:, ::1] Minv = Minv_arr
    cdef double[::1] b = b_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t t
    cdef int i, j
    cdef double q, s, denom, wi
    with nogil:
        for t in range(T):
            # w = Minv @ x ; q = x' w ; s = w' b
            q = 0.0
            s = 0.0
            for i in range(d):
                wi = 0.0
                for j in range(d):
                    wi += Minv[i, j] * xs[t, j]
                w[i] = wi
                q += xs[t, i] * wi
                s += wi * b[i]
            yhat[t] = s / (1.0 + q)
            denom = 1.0 + q
            for i in range(d):
                for j in range(d):
                    Minv[i, j] -= w[i] * w[j] / denom
            for i in range(d):
                b[i] += ys[t] * xs[t, i]
    return yhat_arr


def zeroreg_run(const double[:, ::1] xs, const double[::1] ys):
    """Per-round predictions of the regularization-free forecaster."""
    cdef Py_ssize_t T = xs.shape[0]
    cdef int d = <int> xs.shape[1]
    cdef int lwork = 10 * d if 10 * d > 64 else 64
    yhat_arr = np.empty(T)
    cdef double[::1] yhat = yhat_arr
    cdef double[:, ::1] G = np.zeros((d, d))
    cdef double[:, ::1] A = np.zeros((d, d))
    cdef double[::1] w = np.zeros(d)
    cdef double[::1] b = np.zeros(d)
    cdef double[::1] work = np.zeros(lwork)
    cdef Py_ssize_t t
    cdef int i, j, k, info
    cdef double xi, cut, yh, vb, vx, wmax
    info = 0
    with nogil:
        for t in range(T):
            for i in range(d):
                xi = xs[t, i]
                for j in range(d):
                    G[i, j] += xi * xs[t, j]
            for i in range(d):
                for j in range(d):
                    A[i, j] = G[i, j]
            info = _eigh_inplace(A, w, work, d, lwork)
            if info != 0:
                break
            wmax = w[d - 1] if w[d - 1] > 0.0 else 0.0
            cut = d * wmax * RCOND
            yh = 0.0
            for k in range(d):
                if w[k] > cut:
                    vb = 0.0
                    vx = 0.0
                    for i in range(d):
                        vb += A[k, i] * b[i]
                        vx += A[k, i] * xs[t, i]
                    yh += vb * vx / w[k]
            yhat[t] = yh
            for i in range(d):
                b[i] += ys[t] * xs[t, i]
    if info != 0:
        raise np.linalg.LinAlgError(f"dsyev failed with info={info}")
    return yhat_arr


def adapted_run(const double[:, ::1] xs, const double[::1] ys, double lam,
                const double[:, ::1] gram_prior):
    """Per-round predictions of the ridge forecaster with a Gram-matrix metric."""
    cdef Py_ssize_t T = xs.shape[0]
    cdef int d = <int> xs.shape[1]
    if gram_prior.shape[0] != d or gram_prior.shape[1] != d:
        raise ValueError("gram_prior shape mismatch")
    cdef int lwork = 10 * d if 10 * d > 64 else 64
    yhat_arr = np.empty(T)
    cdef double[::1] yhat = yhat_arr
    cdef double[:, ::1] M = lam * np.asarray(gram_prior)
    cdef double[:, ::1] A = np.zeros((d, d))
    cdef double[::1] w = np.zeros(d)
    cdef double[::1] b = np.zeros(d)
    cdef double[::1] work = np.zeros(lwork)
    cdef Py_ssize_t t
    cdef int i, j, k, info
    cdef double xi, cut, yh, vb, vx, wmax
    info = 0
    with nogil:
        for t in range(T):
            for i in range(d):
                xi = xs[t, i]
                for j in range(d):
                    M[i, j] += xi * xs[t, j]
            for i in range(d):
                for j in range(d):
                    A[i, j] = M[i, j]
            info = _eigh_inplace(A, w, work, d, lwork)
            if info != 0:
                break
            wmax = w[d - 1] if w[d - 1] > 0.0 else 0.0
            cut = d * wmax * RCOND
            yh = 0.0
            for k in range(d):
                if w[k] > cut:
                    vb = 0.0
                    vx = 0.0
                    for i in range(d):
                        vb += A[k, i] * b[i]
                        vx += A[k, i] * xs[t, i]
                    yh += vb * vx / w[k]
            yhat[t] = yh
            for i in range(d):
                b[i] += ys[t] * xs[t, i]
    if info != 0:
        raise np.linalg.LinAlgError(f"dsyev failed with info={info}")
    return yhat_arr


def gram_stream(const double[:, ::1] xs):
    """Eigenvalues of the running Gram matrix plus the per-round quadratic form."""
    cdef Py_ssize_t T = xs.shape[0]
    cdef int d = <int> xs.shape[1]
    cdef int lwork = 10 * d if 10 * d > 64 else 64
    eigs_arr = np.empty((T, d))
    quad_arr = np.empty(T)
    cdef double[:, ::1] eigs = eigs_arr
    cdef double[::1] quad = quad_arr
    cdef double[:, ::1] G = np.zeros((d, d))
    cdef double[:, ::1] A = np.zeros((d, d))
    cdef double[::1] w = np.zeros(d)
    cdef double[::1] work = np.zeros(lwork)
    cdef Py_ssize_t t
    cdef int i, j, k, info
    cdef double xi, cut, qf, vx, wmax
    info = 0
    with nogil:
        for t in range(T):
            for i in range(d):
                xi = xs[t, i]
                for j in range(d):
                    G[i, j] += xi * xs[t, j]
            for i in range(d):
                for j in range(d):
                    A[i, j] = G[i, j]
            info = _eigh_inplace(A, w, work, d, lwork)
            if info != 0:
                break
            wmax = w[d - 1] if w[d - 1] > 0.0 else 0.0
            cut = d * wmax * RCOND
            qf = 0.0
            for k in range(d):
                eigs[t, k] = w[d - 1 - k]
                if w[k] > cut:
                    vx = 0.0
                    for i in range(d):
                        vx += A[k, i] * xs[t, i]
                    qf += vx * vx / w[k]
            # x is part of G, so the exact value never exceeds 1
            quad[t] = qf if qf < 1.0 else 1.0
    if info != 0:
        raise np.linalg.LinAlgError(f"dsyev failed with info={info}")
    return eigs_arr, quad_arr


def vaw_unit_game(const int64_t[::1] J, const double[::1] obs, int d, double lam):
    """Hypothetical ridge predictions for every coordinate of a unit-vector game."""
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    cdef Py_ssize_t T = J.shape[0]
    preds_arr = np.empty((T, d))
    cdef double[:, ::1] preds = preds_arr
    cdef double[:, ::1] Minv = np.eye(d) / lam
    cdef double[::1] b = np.zeros(d)
    cdef double[::1] s = np.zeros(d)
    cdef double[::1] w = np.zeros(d)
    cdef Py_ssize_t t
    cdef int i, j, jj
    cdef double denom, si
    with nogil:
        for t in range(T):
            for i in range(d):
                si = 0.0
                for j in range(d):
                    si += Minv[i, j] * b[j]
                s[i] = si
            for j in range(d):
                preds[t, j] = s[j] / (1.0 + Minv[j, j])
            jj = <int> J[t]
            denom = 1.0 + Minv[jj, jj]
            for i in range(d):
                w[i] = Minv[i, jj]
            for i in range(d):
                for j in range(d):
                    Minv[i, j] -= w[i] * w[j] / denom
            b[jj] += obs[t]
    return preds_arr
