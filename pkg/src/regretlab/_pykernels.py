"""Pure-python reference kernels: one fresh decomposition per round.

These loops define the reference semantics. The compiled twins in
regretlab._kernels must match them (the Sherman-Morrison fast path for the
invertible ridge case to 1e-10, the eigendecomposition-based loops to
floating-point noise), which tests/test_backend.py asserts.
"""

import numpy as np

from .linalg import RANK_RCOND

NAME = "python"


def _pinv_dot(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """pinv(M) @ rhs for symmetric PSD M, via eigendecomposition."""
    w, V = np.linalg.eigh(M)
    cut = M.shape[0] * max(w[-1], 0.0) * RANK_RCOND
    keep = w > cut
    coeffs = np.zeros_like(w)
    coeffs[keep] = (V[:, keep].T @ rhs) / w[keep]
    return V @ coeffs


def vaw_run(xs: np.ndarray, ys: np.ndarray, lam: float) -> np.ndarray:
    """Per-round predictions of the ridge forecaster with regularization lam > 0.

    Round t solves (lam I + G_t) u = b_{t-1} from scratch, where G_t already
    contains the current feature.
    """
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    T, d = xs.shape
    G = np.zeros((d, d))
    b = np.zeros(d)
    yhat = np.empty(T)
    eye = np.eye(d)
    for t in range(T):
        x = xs[t]
        G += np.outer(x, x)
        yhat[t] = x @ np.linalg.solve(lam * eye + G, b)
        b += ys[t] * x
    return yhat


def zeroreg_run(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Per-round predictions of the regularization-free forecaster.

    Round t computes pinv(G_t) b_{t-1} with G_t including the current feature;
    the pseudoinverse supplies the minimal-norm weights on rank-deficient rounds.
    """
    T, d = xs.shape
    G = np.zeros((d, d))
    b = np.zeros(d)
    yhat = np.empty(T)
    for t in range(T):
        x = xs[t]
        G += np.outer(x, x)
        yhat[t] = x @ _pinv_dot(G, b)
        b += ys[t] * x
    return yhat


def adapted_run(xs: np.ndarray, ys: np.ndarray, lam: float,
                gram_prior: np.ndarray) -> np.ndarray:
    """Per-round predictions of the ridge forecaster with a Gram-matrix metric.

    Round t computes pinv(lam * G_prior + G_t) b_{t-1}, with G_t including the
    current feature.
    """
    T, d = xs.shape
    M = lam * np.asarray(gram_prior, dtype=float)
    b = np.zeros(d)
    yhat = np.empty(T)
    for t in range(T):
        x = xs[t]
        M = M + np.outer(x, x)
        yhat[t] = x @ _pinv_dot(M, b)
        b += ys[t] * x
    return yhat


def gram_stream(xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral trace of the running Gram matrix.

    Returns (eigs, quad): eigs[t] holds the eigenvalues of G_{t+1} in
    descending order and quad[t] = x' pinv(G) x for the feature absorbed at
    that round. Because G already contains x x', the quadratic form cannot
    exceed 1 in exact arithmetic; it is clamped there to keep ill-conditioned
    rounds from leaking eigensolver noise.
    """
    T, d = xs.shape
    G = np.zeros((d, d))
    eigs = np.empty((T, d))
    quad = np.empty(T)
    for t in range(T):
        x = xs[t]
        G += np.outer(x, x)
        w, V = np.linalg.eigh(G)
        cut = d * max(w[-1], 0.0) * RANK_RCOND
        keep = w > cut
        coords = V[:, keep].T @ x
        quad[t] = min(float(coords @ (coords / w[keep])), 1.0) if np.any(keep) else 0.0
        eigs[t] = w[::-1]
    return eigs, quad


def vaw_unit_game(J: np.ndarray, obs: np.ndarray, d: int, lam: float) -> np.ndarray:
    """Hypothetical ridge predictions on a unit-vector feature game.

    J[t] is the active coordinate at round t and obs[t] the observation.
    Returns a (T, d) matrix whose (t, j) entry is the prediction the
    forecaster would issue at round t were the feature e_j. The Gram matrix
    stays diagonal here, so each entry is b_j / (lam + n_j + 1) in closed form.
    """
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    T = len(J)
    preds = np.empty((T, d))
    counts = np.zeros(d)
    b = np.zeros(d)
    for t in range(T):
        preds[t] = b / (lam + counts + 1.0)
        j = J[t]
        counts[j] += 1.0
        b[j] += obs[t]
    return preds
