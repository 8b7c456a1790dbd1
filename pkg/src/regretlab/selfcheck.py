"""Built-in identity and invariant suite behind the `verify` subcommand.

Each check returns a CheckResult; the CLI prints one line per check and exits
nonzero when any fails. Tests reuse the same functions so the shipped binary
and the test suite cannot drift apart.

Random inputs are generated with controlled spectra: the identities under
test hold exactly in real arithmetic, so the checks keep condition numbers
moderate to leave the stated tolerances entirely for floating-point error.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .forecasters import ForecasterSpec, predict_sequence
from .linalg import (GramState, eigen_product_identity, det_ratio_identity,
                     gram_update, pinv_sqrt, pseudoinverse, penrose_check,
                     reduced_basis)
from .sequences import FeatureSequence, warmup_prefix


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"[{'ok' if self.ok else 'FAIL'}] {self.name}: {self.detail}"


# ---------------------------------------------------------------------------
# controlled random inputs


def random_matrix(rng, m: int, n: int, rank: int | None = None,
                  sv_range: tuple[float, float] = (0.3, 3.0),
                  scale: float = 1.0) -> np.ndarray:
    """m x n matrix with prescribed rank and singular values in sv_range * scale."""
    k = min(m, n) if rank is None else rank
    if k == 0:
        return np.zeros((m, n))
    U = np.linalg.qr(rng.standard_normal((m, k)))[0]
    V = np.linalg.qr(rng.standard_normal((n, k)))[0]
    s = np.sort(rng.uniform(*sv_range, size=k))[::-1] * scale
    return (U * s) @ V.T


def random_psd(rng, d: int, rank: int | None = None,
               eig_range: tuple[float, float] = (0.3, 3.0),
               scale: float = 1.0) -> np.ndarray:
    """Symmetric PSD d x d matrix with prescribed rank and controlled spectrum."""
    k = d if rank is None else rank
    if k == 0:
        return np.zeros((d, d))
    Q = np.linalg.qr(rng.standard_normal((d, k)))[0]
    w = rng.uniform(*eig_range, size=k) * scale
    M = (Q * w) @ Q.T
    return 0.5 * (M + M.T)


def random_invertible(rng, d: int,
                      sv_range: tuple[float, float] = (0.5, 2.0)) -> np.ndarray:
    return random_matrix(rng, d, d, sv_range=sv_range)


def random_sequence(rng, d: int, T: int, rank: int | None = None,
                    max_cond: float = 1e6) -> FeatureSequence:
    """Random game transcript whose final Gram matrix is well conditioned.

    rank restricts features to a random subspace of that dimension. ys follow
    a noisy linear model clamped to [-1, 1].
    """
    r = d if rank is None else rank
    for _ in range(64):
        xs = rng.standard_normal((T, d))
        if r < d:
            W = np.linalg.qr(rng.standard_normal((d, r)))[0]
            xs = (xs[:, :r]) @ W.T
        eigs = np.linalg.eigvalsh(xs.T @ xs)[::-1]
        positive = eigs[:r]
        if positive[-1] > 0 and positive[0] / positive[-1] <= max_cond:
            break
    else:
        raise RuntimeError("could not draw a well-conditioned sequence")
    u0 = rng.standard_normal(d) / math.sqrt(d)
    ys = np.clip(xs @ u0 + 0.1 * rng.standard_normal(T), -1.0, 1.0)
    return FeatureSequence(xs, ys)


def _mixed_test_matrix(rng) -> np.ndarray:
    """Matrix for the pseudoinverse suite: mixed shape, rank and scale."""
    m = int(rng.integers(1, 7))
    n = int(rng.integers(1, 7))
    rank = int(rng.integers(0, min(m, n) + 1))
    scale = 10.0 ** rng.uniform(-3.0, 3.0)
    return random_matrix(rng, m, n, rank=rank, scale=scale)


# ---------------------------------------------------------------------------
# linear-algebra checks


def check_penrose(count: int = 1000, seed: int = 11) -> CheckResult:
    """pseudoinverse(M) passes the four-product check on mixed random matrices."""
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(count):
        M = _mixed_test_matrix(rng)
        if not penrose_check(M, pseudoinverse(M), 1e-8):
            failures += 1
    return CheckResult("penrose_products", failures == 0,
                       f"{count - failures}/{count} matrices within 1e-8*(1+|M||P|)")


def check_pinv_limit(count: int = 25, seed: int = 12) -> CheckResult:
    """The ridge-regularized inverse formula converges to the pseudoinverse.

    For each matrix, the error of M' (lam I + M M')^{-1} against pinv(M) must
    not increase as lam shrinks through 1e-2, 1e-4, 1e-6 and must end below
    1e-4 * |pinv(M)|.
    """
    rng = np.random.default_rng(seed)
    lams = (1e-2, 1e-4, 1e-6)
    worst = 0.0
    ok = True
    for _ in range(count):
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 6))
        rank = int(rng.integers(1, min(m, n) + 1))
        M = random_matrix(rng, m, n, rank=rank)
        P = pseudoinverse(M)
        pnorm = np.linalg.norm(P)
        errs = [np.linalg.norm(M.T @ np.linalg.solve(lam * np.eye(m) + M @ M.T,
                                                     np.eye(m)) - P)
                for lam in lams]
        if not all(errs[i + 1] <= errs[i] * (1.0 + 1e-12) + 1e-300
                   for i in range(len(errs) - 1)):
            ok = False
        ratio = errs[-1] / pnorm
        worst = max(worst, ratio)
        if ratio >= 1e-4:
            ok = False
    return CheckResult("pinv_ridge_limit", ok,
                       f"worst relative error at lam=1e-6: {worst:.3e}")


def check_pinv_identities(count: int = 200, seed: int = 13) -> CheckResult:
    """pinv(M) = M'(M M')^+ and the minimal-norm property of pinv solutions."""
    rng = np.random.default_rng(seed)
    ok = True
    worst = 0.0
    for _ in range(count):
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 6))
        rank = int(rng.integers(1, min(m, n) + 1))
        M = random_matrix(rng, m, n, rank=rank)
        P = pseudoinverse(M)
        pnorm = np.linalg.norm(P)
        err = np.linalg.norm(P - M.T @ pseudoinverse(M @ M.T)) / pnorm
        worst = max(worst, err)
        if err > 1e-8:
            ok = False
        x0 = rng.standard_normal(n)
        z = M @ x0
        xo = P @ z
        if np.linalg.norm(M @ xo - z) > 1e-8 * (1.0 + np.linalg.norm(z)):
            ok = False
        if np.linalg.norm(xo) > np.linalg.norm(x0) * (1.0 + 1e-10) + 1e-300:
            ok = False
    return CheckResult("pinv_identities", ok,
                       f"worst factorization error {worst:.3e}; minimal-norm "
                       f"solutions verified on {count} consistent systems")


def check_eigen_monotonicity(count: int = 50, seed: int = 14) -> CheckResult:
    """Every Gram update can only push sorted eigenvalues up."""
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(count):
        d = int(rng.integers(1, 6))
        T = int(rng.integers(1, 15))
        state = GramState.empty(d)
        for t in range(T):
            x = rng.standard_normal(d) * 10.0 ** rng.uniform(-1, 1)
            prev = state.eigs
            state = gram_update(state, x)
            tol = 1e-9 * (1.0 + float(state.eigs[0]))
            if np.any(state.eigs < prev - tol):
                ok = False
    return CheckResult("gram_eigen_monotone", ok,
                       f"{count} random streams, sorted spectra never decreased")


def check_image_growth(count: int = 40, seed: int = 15) -> CheckResult:
    """The reduced-basis projector of G_t fixes every feature seen up to t."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(2, 6))
        rank = int(rng.integers(1, d + 1))
        seq = random_sequence(rng, d, T=10, rank=rank)
        state = GramState.empty(d)
        for t in range(seq.T):
            state = gram_update(state, seq.xs[t])
            if state.rank == 0:
                continue
            proj = reduced_basis(state.G).projector()
            for s in range(t + 1):
                x = seq.xs[s]
                err = np.linalg.norm(proj @ x - x) / (1.0 + np.linalg.norm(x))
                worst = max(worst, err)
    return CheckResult("gram_image_growth", worst <= 1e-8,
                       f"worst projection residual {worst:.3e}")


def check_rank_one_identities(count: int = 1000, seed: int = 16) -> CheckResult:
    """Both rank-one identities agree between their two evaluation routes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(1, 7))
        scale = 10.0 ** rng.uniform(-1.0, 1.0)
        V = random_matrix(rng, d, d, sv_range=(0.5, 2.0), scale=scale)
        u = rng.standard_normal(d)
        v = rng.standard_normal(d)
        lhs, rhs = det_ratio_identity(V, u, v)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))

        rank = int(rng.integers(0, d + 1))
        B = random_psd(rng, d, rank=rank, scale=scale)
        x = rng.standard_normal(d)
        lhs, rhs = eigen_product_identity(B, x)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    return CheckResult("rank_one_identities", worst <= 1e-8,
                       f"worst relative disagreement {worst:.3e} over {count} instances")


# ---------------------------------------------------------------------------
# forecaster checks


def check_whitening(trials: int = 100, seed: int = 21,
                    backend: str | None = None) -> CheckResult:
    """Gram-metric ridge equals plain ridge on whitened features (full rank)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        T = int(rng.integers(2 * d + 3, 51))
        lam = float(rng.uniform(0.05, 2.0))
        seq = random_sequence(rng, d, T)
        S = pinv_sqrt(seq.xs.T @ seq.xs)
        ya = predict_sequence(ForecasterSpec.adapted(lam), seq.xs, seq.ys,
                              backend=backend)
        yb = predict_sequence(ForecasterSpec.vaw(lam), seq.xs @ S, seq.ys,
                              backend=backend)
        worst = max(worst, float(np.abs(ya - yb).max()))
    return CheckResult("whitening_equivalence", worst < 1e-8,
                       f"max prediction gap {worst:.3e} over {trials} full-rank trials")


def check_whitening_rank_deficient(trials: int = 100, seed: int = 22,
                                   backend: str | None = None) -> CheckResult:
    """Same equivalence through the reduced basis when the Gram matrix is singular."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, 6))
        r = int(rng.integers(1, d))
        T = int(rng.integers(2 * d + 3, 51))
        lam = float(rng.uniform(0.05, 2.0))
        seq = random_sequence(rng, d, T, rank=r)
        basis = reduced_basis(seq.xs.T @ seq.xs)
        reduced = seq.xs @ basis.U / np.sqrt(basis.sigma)
        ya = predict_sequence(ForecasterSpec.adapted(lam), seq.xs, seq.ys,
                              backend=backend)
        yb = predict_sequence(ForecasterSpec.vaw(lam), reduced, seq.ys,
                              backend=backend)
        worst = max(worst, float(np.abs(ya - yb).max()))
    return CheckResult("whitening_rank_deficient", worst < 1e-8,
                       f"max prediction gap {worst:.3e} over {trials} singular trials")


def check_scale_invariance(trials: int = 50, seed: int = 23,
                           backend: str | None = None) -> CheckResult:
    """Gram-metric ridge predictions survive any invertible feature map."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        T = int(rng.integers(2 * d + 3, 41))
        lam = float(rng.uniform(0.05, 2.0))
        seq = random_sequence(rng, d, T)
        G_T = seq.xs.T @ seq.xs
        Gamma = random_invertible(rng, d)
        ya = predict_sequence(ForecasterSpec.adapted(lam, gram_prior=G_T),
                              seq.xs, seq.ys, backend=backend)
        yb = predict_sequence(
            ForecasterSpec.adapted(lam, gram_prior=Gamma @ G_T @ Gamma.T),
            seq.xs @ Gamma.T, seq.ys, backend=backend)
        worst = max(worst, float(np.abs(ya - yb).max()))
    return CheckResult("adapted_scale_invariance", worst < 1e-8,
                       f"max prediction gap {worst:.3e} over {trials} maps")


def check_scalar_scale_invariance(trials: int = 20, seed: int = 24,
                                  backend: str | None = None) -> CheckResult:
    """The regularization-free forecaster ignores positive feature rescaling."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 5))
        T = int(rng.integers(d + 2, 31))
        seq = random_sequence(rng, d, T, rank=int(rng.integers(1, d + 1)))
        base = predict_sequence(ForecasterSpec.zeroreg(), seq.xs, seq.ys,
                                backend=backend)
        for gamma in (0.01, 1.0, 100.0):
            scaled = predict_sequence(ForecasterSpec.zeroreg(), gamma * seq.xs,
                                      seq.ys, backend=backend)
            worst = max(worst, float(np.abs(base - scaled).max()))
    return CheckResult("zeroreg_scalar_invariance", worst < 1e-8,
                       f"max prediction gap {worst:.3e} for gamma in {{0.01, 1, 100}}")


def check_warmup(trials: int = 50, seed: int = 25,
                 backend: str | None = None) -> CheckResult:
    """Axis-aligned warm-up rounds turn the regularization-free run into ridge."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(1, 6))
        T = int(rng.integers(d + 2, 41))
        lam = float(rng.uniform(0.1, 5.0))
        seq = random_sequence(rng, d, T, rank=int(rng.integers(1, d + 1)))
        padded = warmup_prefix(d, lam).concat(seq)
        za = predict_sequence(ForecasterSpec.zeroreg(), padded.xs, padded.ys,
                              backend=backend)[d:]
        zb = predict_sequence(ForecasterSpec.vaw(lam), seq.xs, seq.ys,
                              backend=backend)
        worst = max(worst, float(np.abs(za - zb).max()))
    return CheckResult("warmup_reduction", worst < 1e-8,
                       f"max prediction gap {worst:.3e} over {trials} sequences")


def check_null_feature(seed: int = 26) -> CheckResult:
    """Every forecaster predicts exactly 0 on a null feature."""
    rng = np.random.default_rng(seed)
    d, T = 3, 6
    seq = random_sequence(rng, d, T)
    specs = [ForecasterSpec.vaw(0.7), ForecasterSpec.adapted(0.3),
             ForecasterSpec.zeroreg(), ForecasterSpec.mm(),
             ForecasterSpec.biased_zeroreg(0.5)]
    ok = True
    for spec in specs:
        f = spec.build(d, features=seq.xs)
        for t in range(T - 1):
            f.predict(seq.xs[t])
            f.observe(seq.ys[t])
        if f.predict(np.zeros(d)) != 0.0:
            ok = False
    return CheckResult("null_feature_prediction", ok,
                       f"{len(specs)} forecasters return exactly 0 on x = 0")


def _oracle_weights(kind: str, xs: np.ndarray, ys: np.ndarray, t: int,
                    lam: float, schedule: np.ndarray) -> np.ndarray:
    """Minimal-norm minimizer of the round-t objective via stacked least squares.

    The objective is a sum of squared residuals, so its minimizers are the
    least-squares solutions of the stacked design; numpy's lstsq picks the
    minimal-norm one through an independent SVD route.
    """
    d = xs.shape[1]
    rows = [xs[:t], xs[t:t + 1]]
    rhs = [ys[:t], np.zeros(1)]
    if kind == "vaw":
        rows.append(math.sqrt(lam) * np.eye(d))
        rhs.append(np.zeros(d))
    elif kind == "adapted":
        rows.append(math.sqrt(lam) * schedule)
        rhs.append(np.zeros(len(schedule)))
    design = np.vstack(rows)
    target = np.concatenate(rhs)
    return np.linalg.lstsq(design, target, rcond=None)[0]


def check_closed_form_oracle(count: int = 200, seed: int = 27) -> CheckResult:
    """Closed-form weight vectors match direct numerical minimization.

    Small random games (d <= 3, T <= 10, including rank-deficient rounds);
    each forecaster's weights at every round are compared to the minimal-norm
    least-squares solution of its defining objective.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        d = int(rng.integers(1, 4))
        T = int(rng.integers(1, 11))
        rank = int(rng.integers(1, d + 1))
        xs = rng.standard_normal((T, d))
        if rank < d:
            W = np.linalg.qr(rng.standard_normal((d, rank)))[0]
            xs = xs[:, :rank] @ W.T
        ys = np.clip(rng.standard_normal(T), -1.0, 1.0)
        lam = float(rng.uniform(0.05, 2.0))
        forecasters = {
            "vaw": ForecasterSpec.vaw(lam).build(d),
            "adapted": ForecasterSpec.adapted(lam, feature_schedule=xs).build(d),
            "zeroreg": ForecasterSpec.zeroreg().build(d),
        }
        for t in range(T):
            for kind, f in forecasters.items():
                closed = f.weight_vector(xs[t])
                oracle = _oracle_weights(kind, xs, ys, t, lam, xs)
                err = np.linalg.norm(closed - oracle) / (1.0 + np.linalg.norm(oracle))
                worst = max(worst, err)
                f.predict(xs[t])
                f.observe(ys[t])
    return CheckResult("closed_form_vs_oracle", worst <= 1e-6,
                       f"worst weight-vector gap {worst:.3e} over {count} games")


def scalar_objective_minimizer(history_x, history_y, x_now: float, lam: float) -> float:
    """Brute-force 1-d minimizer of the ridge objective, for spot checks."""
    def objective(u):
        past = sum((y - u * x) ** 2 for x, y in zip(history_x, history_y))
        return past + (u * x_now) ** 2 + lam * u ** 2

    return float(minimize_scalar(objective).x)


# ---------------------------------------------------------------------------
# suite driver


def run_all(fast: bool = False, backend: str | None = None) -> list[CheckResult]:
    """Run every check; `fast` shrinks the sample counts for smoke testing."""
    k = 0.1 if fast else 1.0

    def n(base: int) -> int:
        return max(5, int(base * k))

    return [
        check_penrose(count=n(1000)),
        check_pinv_limit(count=n(25)),
        check_pinv_identities(count=n(200)),
        check_eigen_monotonicity(count=n(50)),
        check_image_growth(count=n(40)),
        check_rank_one_identities(count=n(1000)),
        check_whitening(trials=n(100), backend=backend),
        check_whitening_rank_deficient(trials=n(100), backend=backend),
        check_scale_invariance(trials=n(50), backend=backend),
        check_scalar_scale_invariance(trials=n(20), backend=backend),
        check_warmup(trials=n(50), backend=backend),
        check_null_feature(),
        check_closed_form_oracle(count=n(200)),
    ]
