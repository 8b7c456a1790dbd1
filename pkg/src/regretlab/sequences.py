"""Feature/observation sequences: generators, transforms and CSV I/O."""

import csv
from dataclasses import dataclass

import numpy as np

from .linalg import RANK_RCOND, as_matrix, as_vector

# Round-trip-safe decimal text for float64.
CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class FeatureSequence:
    """A game transcript: T feature vectors in R^d plus T scalar observations."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = as_matrix(self.xs, name="xs")
        ys = as_vector(self.ys, name="ys")
        if xs.shape[0] != ys.shape[0]:
            raise ValueError(f"{xs.shape[0]} features but {ys.shape[0]} observations")
        if xs.shape[0] < 1:
            raise ValueError("sequence must contain at least one round")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        xs.setflags(write=False)
        ys.setflags(write=False)

    def __len__(self) -> int:
        return int(self.xs.shape[0])

    @property
    def d(self) -> int:
        return int(self.xs.shape[1])

    @property
    def T(self) -> int:
        return len(self)

    def concat(self, other: "FeatureSequence") -> "FeatureSequence":
        if other.d != self.d:
            raise ValueError("dimension mismatch")
        return FeatureSequence(np.vstack([self.xs, other.xs]),
                               np.concatenate([self.ys, other.ys]))

    def with_features(self, xs) -> "FeatureSequence":
        return FeatureSequence(np.asarray(xs, dtype=float), self.ys.copy())

    def max_feature_norm(self) -> float:
        return float(np.linalg.norm(self.xs, axis=1).max())


def gen_gaussian(d: int, T: int, scale: float = 1.0, seed: int = 0) -> FeatureSequence:
    """I.i.d. Gaussian features with observations from a hidden linear model.

    Features are scale * N(0, I_d); observations are a noisy linear response
    clamped to [-1, 1], so the observation bound 1 always applies.
    Deterministic under the seed.
    """
    if d < 1 or T < 1:
        raise ValueError("d and T must be >= 1")
    rng = np.random.default_rng(seed)
    xs = scale * rng.standard_normal((T, d))
    u0 = rng.standard_normal(d) / np.sqrt(d)
    noise = 0.1 * rng.standard_normal(T)
    ys = np.clip(xs @ u0 + noise, -1.0, 1.0)
    return FeatureSequence(xs, ys)


def gen_decaying(d: int, T: int, decay: float = 0.5, seed: int = 0) -> FeatureSequence:
    """Random unit directions with geometrically shrinking norms.

    Feature t has norm decay**t, so early rounds dominate the Gram matrix.
    Sequences from this family routinely satisfy the backward-induction
    feasibility margins that i.i.d. features violate. Observations follow the
    same clamped linear model as gen_gaussian.
    """
    if d < 1 or T < 1:
        raise ValueError("d and T must be >= 1")
    if not 0.0 < decay <= 1.0:
        raise ValueError("decay must be in (0, 1]")
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((T, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    xs = dirs * decay ** np.arange(T)[:, None]
    u0 = rng.standard_normal(d) / np.sqrt(d)
    ys = np.clip(xs @ u0 + 0.1 * rng.standard_normal(T), -1.0, 1.0)
    return FeatureSequence(xs, ys)


def warmup_prefix(d: int, lam: float) -> FeatureSequence:
    """d warm-up rounds: feature sqrt(lam) * e_k with observation 0 for each axis k."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if lam < 0.0:
        raise ValueError("lam must be >= 0")
    return FeatureSequence(np.sqrt(lam) * np.eye(d), np.zeros(d))


def apply_linear_map(seq: FeatureSequence, Gamma) -> FeatureSequence:
    """Replace every feature x by Gamma @ x; observations are unchanged."""
    Gamma = as_matrix(Gamma, shape=(seq.d, seq.d), name="Gamma")
    s = np.linalg.svd(Gamma, compute_uv=False)
    if s[-1] <= seq.d * s[0] * RANK_RCOND:
        raise np.linalg.LinAlgError("Gamma is singular within the rank cutoff")
    return seq.with_features(seq.xs @ Gamma.T)


def save_csv(seq: FeatureSequence, path) -> None:
    """Write a sequence as CSV with header x1,...,xd,y at full float precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(seq.d)] + ["y"])
        for x, y in zip(seq.xs, seq.ys):
            writer.writerow([CSV_FLOAT_FORMAT % v for v in x] + [CSV_FLOAT_FORMAT % y])


def load_csv(path) -> FeatureSequence:
    """Parse a sequence from CSV with header x1,...,xd,y, one row per round.

    Malformed rows raise ValueError naming the offending 1-based line.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        d = len(header) - 1
        expected = [f"x{i + 1}" for i in range(d)] + ["y"]
        if d < 1 or header != expected:
            raise ValueError(f"{path}: line 1: expected header "
                             f"x1,...,xd,y, got {','.join(header)}")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ValueError(f"{path}: line {lineno}: expected {d + 1} "
                                 f"columns, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric value") from None
            if not all(np.isfinite(values)):
                raise ValueError(f"{path}: line {lineno}: non-finite value")
            xs.append(values[:d])
            ys.append(values[d])
    if not xs:
        raise ValueError(f"{path}: no data rows")
    return FeatureSequence(np.array(xs), np.array(ys))
