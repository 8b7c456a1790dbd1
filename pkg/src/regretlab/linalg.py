"""Dense symmetric linear algebra for streaming Gram matrices.

Everything operates on plain float64 numpy arrays. All functions are pure:
they never mutate their inputs and return fresh arrays, so values can be
shared read-only across threads.

The numerical rank convention used throughout the package: a singular value
(or eigenvalue of a positive semidefinite matrix) counts as positive iff it
exceeds ``max(m, n) * largest * RANK_RCOND``. The zero matrix has rank 0 and
pseudoinverse 0.
"""

from dataclasses import dataclass

import numpy as np

# Relative rank cutoff, scale-invariant: sigma > max(m, n) * sigma_max * RANK_RCOND.
RANK_RCOND = 1e-12

# Relative tolerance when deciding whether an input matrix is symmetric.
SYM_RTOL = 1e-10

# Factor around the rank cutoff inside which an eigenvalue is flagged as
# "near cutoff": the numerical rank is then a judgment call worth surfacing.
NEAR_CUTOFF_FACTOR = 1e2


def as_vector(x, d: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce to a finite 1-d float vector, checking dimension if given."""
    arr = np.ascontiguousarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ValueError(f"{name} has dimension {arr.shape[0]}, expected {d}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_matrix(M, shape: tuple[int, int] | None = None, name: str = "M") -> np.ndarray:
    """Coerce to a finite 2-d float matrix, checking shape if given."""
    arr = np.ascontiguousarray(M, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix, got shape {arr.shape}")
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def require_symmetric(G, name: str = "G") -> np.ndarray:
    """Validate symmetry within SYM_RTOL and return the symmetrized matrix."""
    arr = as_matrix(G, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    scale = float(np.abs(arr).max(initial=0.0))
    asym = float(np.abs(arr - arr.T).max(initial=0.0))
    if asym > SYM_RTOL * (1.0 + scale):
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    return 0.5 * (arr + arr.T)


def rank_cutoff(largest: float, n: int) -> float:
    """Threshold below which a spectral value is treated as zero."""
    return n * max(largest, 0.0) * RANK_RCOND


def eigh_desc(G: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvector columns of a symmetric matrix."""
    w, V = np.linalg.eigh(G)
    return w[::-1].copy(), V[:, ::-1].copy()


def pseudoinverse(M) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with the relative rank cutoff.

    Singular values at or below ``max(m, n) * sigma_max * RANK_RCOND`` are
    dropped; the zero matrix maps to the zero matrix. The result satisfies
    the four defining product identities up to floating-point error, which
    penrose_check verifies independently.
    """
    arr = as_matrix(M)
    if arr.size == 0:
        return arr.T.copy()
    U, s, Vt = np.linalg.svd(arr, full_matrices=False)
    cut = rank_cutoff(float(s[0]) if s.size else 0.0, max(arr.shape))
    keep = s > cut
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (Vt.T * inv) @ U.T


def penrose_check(M, P, tol: float) -> bool:
    """True iff P behaves as the pseudoinverse of M within tolerance.

    Checks the four product identities MPM = M, PMP = P, (MP)' = MP and
    (PM)' = PM, each in Frobenius norm against ``tol * (1 + |M| |P|)``.
    """
    M = as_matrix(M, name="M")
    P = as_matrix(P, name="P")
    if P.shape != (M.shape[1], M.shape[0]):
        raise ValueError(f"P has shape {P.shape}, expected {(M.shape[1], M.shape[0])}")
    MP = M @ P
    PM = P @ M
    budget = tol * (1.0 + np.linalg.norm(M) * np.linalg.norm(P))
    residuals = (
        np.linalg.norm(MP @ M - M),
        np.linalg.norm(PM @ P - P),
        np.linalg.norm(MP - MP.T),
        np.linalg.norm(PM - PM.T),
    )
    return bool(max(residuals) <= budget)


def pinv_sqrt(G) -> np.ndarray:
    """Pseudoinverse square root of a symmetric PSD matrix.

    Same eigenvectors as G, eigenvalues lam**-0.5 above the rank cutoff and 0
    below; for full-rank G this is the inverse matrix square root.
    """
    sym = require_symmetric(G)
    w, V = eigh_desc(sym)
    _check_psd(w, name="G")
    cut = rank_cutoff(float(w[0]) if w.size else 0.0, sym.shape[0])
    inv = np.where(w > cut, 1.0 / np.sqrt(np.where(w > cut, w, 1.0)), 0.0)
    return (V * inv) @ V.T


@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal basis U (d x r) of the image of a PSD matrix, G = U diag(sigma) U'."""

    U: np.ndarray
    sigma: np.ndarray  # positive eigenvalues, descending

    def __post_init__(self):
        self.U.setflags(write=False)
        self.sigma.setflags(write=False)

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    @property
    def Sigma(self) -> np.ndarray:
        return np.diag(self.sigma)

    def projector(self) -> np.ndarray:
        """Orthogonal projector U U' onto the image."""
        return self.U @ self.U.T


def reduced_basis(G) -> ReducedBasis:
    """Spectral factorization G = U diag(sigma) U' restricted to the positive part.

    Raises on the zero matrix (rank 0), which has no basis to return.
    """
    sym = require_symmetric(G)
    w, V = eigh_desc(sym)
    _check_psd(w, name="G")
    cut = rank_cutoff(float(w[0]) if w.size else 0.0, sym.shape[0])
    r = int(np.sum(w > cut))
    if r == 0:
        raise ValueError("G has rank 0; no reduced basis exists")
    return ReducedBasis(U=V[:, :r].copy(), sigma=w[:r].copy())


def quad_form_pinv(G, x) -> float:
    """Quadratic form x' pinv(G) x for symmetric PSD G."""
    sym = require_symmetric(G)
    x = as_vector(x, d=sym.shape[0])
    w, V = eigh_desc(sym)
    cut = rank_cutoff(float(w[0]) if w.size else 0.0, sym.shape[0])
    coords = V.T @ x
    keep = w > cut
    if not np.any(keep):
        return 0.0
    return float(np.sum(coords[keep] ** 2 / w[keep]))


def det_ratio_identity(V, u, v) -> tuple[float, float]:
    """Evaluate both sides of the rank-one determinant identity.

    For invertible V returns (v' inv(V) u, 1 - det(V - u v') / det(V)); the two
    agree up to floating-point error, which callers assert.
    """
    V = as_matrix(V, name="V")
    if V.shape[0] != V.shape[1]:
        raise ValueError("V must be square")
    d = V.shape[0]
    u = as_vector(u, d=d, name="u")
    v = as_vector(v, d=d, name="v")
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] <= rank_cutoff(float(s[0]), d):
        raise np.linalg.LinAlgError("V is singular within the rank cutoff")
    lhs = float(v @ np.linalg.solve(V, u))
    rhs = 1.0 - float(np.linalg.det(V - np.outer(u, v)) / np.linalg.det(V))
    return lhs, rhs


def eigen_product_identity(B, x) -> tuple[float, float]:
    """Evaluate both sides of the spectral form of the rank-one update identity.

    With A = B + x x' of rank r >= 1, returns
    (x' pinv(A) x, 1 - prod_{k<=r} lam_k(B) / lam_k(A)) for descending
    eigenvalues; the two agree up to floating-point error.
    """
    B = require_symmetric(B, name="B")
    d = B.shape[0]
    x = as_vector(x, d=d)
    wB = np.linalg.eigvalsh(B)[::-1]
    _check_psd(wB, name="B")
    A = B + np.outer(x, x)
    wA, VA = eigh_desc(A)
    cut = rank_cutoff(float(wA[0]) if wA.size else 0.0, d)
    r = int(np.sum(wA > cut))
    if r == 0:
        raise ValueError("B + x x' has rank 0; identity undefined")
    coords = VA.T @ x
    lhs = float(np.sum(coords[:r] ** 2 / wA[:r]))
    ratios = np.maximum(wB[:r], 0.0) / wA[:r]
    rhs = 1.0 - float(np.prod(ratios))
    return lhs, rhs


def _check_psd(eigs_desc: np.ndarray, name: str = "G") -> None:
    scale = float(eigs_desc[0]) if eigs_desc.size else 0.0
    floor = -1e-8 * max(scale, 1.0)
    if eigs_desc.size and float(eigs_desc[-1]) < floor:
        raise ValueError(f"{name} is not positive semidefinite "
                         f"(eigenvalue {eigs_desc[-1]:.3e})")


@dataclass(frozen=True)
class GramState:
    """Running Gram matrix of a feature stream plus its spectral bookkeeping.

    G is the sum of outer products of the absorbed features, b the running
    moment vector (updated separately from G because the moment lags the
    current feature by one round), t the number of absorbed features, eigs
    the eigenvalues of G in descending order, and events the rounds at which
    the numerical rank increased.
    """

    G: np.ndarray
    b: np.ndarray
    t: int
    rank: int
    eigs: np.ndarray
    events: tuple[int, ...]

    def __post_init__(self):
        self.G.setflags(write=False)
        self.b.setflags(write=False)
        self.eigs.setflags(write=False)

    @classmethod
    def empty(cls, d: int) -> "GramState":
        if d < 1:
            raise ValueError("dimension must be >= 1")
        return cls(G=np.zeros((d, d)), b=np.zeros(d), t=0, rank=0,
                   eigs=np.zeros(d), events=())

    @property
    def d(self) -> int:
        return int(self.b.shape[0])

    @property
    def smallest_positive_eig(self) -> float:
        """Smallest eigenvalue above the rank cutoff; 0.0 when rank is 0."""
        if self.rank == 0:
            return 0.0
        return float(self.eigs[self.rank - 1])

    @property
    def near_cutoff(self) -> bool:
        """True when some eigenvalue sits within a couple of decades of the cutoff."""
        cut = rank_cutoff(float(self.eigs[0]), self.d)
        if cut == 0.0:
            return False
        lo, hi = cut / NEAR_CUTOFF_FACTOR, cut * NEAR_CUTOFF_FACTOR
        return bool(np.any((self.eigs > lo) & (self.eigs < hi)))


def gram_update(state: GramState, x) -> GramState:
    """Absorb one feature into the Gram matrix and refresh its spectrum.

    Returns a fresh state with G + x x', t + 1, recomputed eigenvalues, and
    t + 1 appended to the rank-event list when the rank grew. The moment
    vector b is carried over untouched.
    """
    x = as_vector(x, d=state.d)
    G = state.G + np.outer(x, x)
    G = 0.5 * (G + G.T)
    eigs = np.linalg.eigvalsh(G)[::-1].copy()
    _check_psd(eigs)
    cut = rank_cutoff(float(eigs[0]), state.d)
    rank = int(np.sum(eigs > cut))
    if rank > state.rank + 1 or rank < state.rank:
        raise np.linalg.LinAlgError(
            f"numerical rank moved from {state.rank} to {rank} in a single "
            "rank-one update; eigenvalues sit too close to the cutoff")
    t = state.t + 1
    events = state.events + (t,) if rank == state.rank + 1 else state.events
    return GramState(G=G, b=state.b, t=t, rank=rank, eigs=eigs, events=events)
