"""The online forecasters behind a single predict/observe interface.

All forecasters share the same handshake: ``predict(x)`` returns the
prediction for feature x (the current feature is absorbed into the Gram term
before predicting, the moment vector lags one round), then ``observe(y)``
commits the pair. ``predict`` never mutates committed state, so hypothetical
queries are cheap: call it with several candidate features and only the last
one before ``observe`` counts.

Weight vectors are never clipped; none of the forecasters knows the
observation range.
"""

from dataclasses import dataclass, replace

import numpy as np

from ._backend import get_kernels
from .linalg import (GramState, as_matrix, as_vector, gram_update,
                     pseudoinverse, require_symmetric)

KINDS = ("vaw", "adapted", "zeroreg", "mm", "biased_zeroreg")


@dataclass(frozen=True)
class RoundRecord:
    """One round of the prediction game."""

    t: int
    x: np.ndarray
    yhat: float
    y: float
    loss: float


@dataclass(frozen=True)
class ForecasterSpec:
    """Declarative forecaster configuration.

    kind              one of KINDS
    lam               regularization weight (vaw: > 0; adapted and
                      biased_zeroreg: >= 0; ignored by zeroreg and mm)
    gram_prior        optional d x d PSD matrix used by 'adapted' as the
                      regularization metric; knowing this matrix alone is
                      enough, the full feature schedule is not needed
    feature_schedule  optional (T, d) feature matrix; required by 'mm' and an
                      alternative way to supply the 'adapted' metric; when
                      absent, builders fall back to the evaluation sequence
    """

    kind: str
    lam: float = 0.0
    gram_prior: np.ndarray | None = None
    feature_schedule: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown forecaster kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "vaw" and self.lam <= 0.0:
            raise ValueError("vaw requires lam > 0")
        if self.kind in ("adapted", "biased_zeroreg") and self.lam < 0.0:
            raise ValueError(f"{self.kind} requires lam >= 0")

    @classmethod
    def vaw(cls, lam: float) -> "ForecasterSpec":
        return cls(kind="vaw", lam=lam)

    @classmethod
    def adapted(cls, lam: float, gram_prior=None, feature_schedule=None) -> "ForecasterSpec":
        return cls(kind="adapted", lam=lam, gram_prior=gram_prior,
                   feature_schedule=feature_schedule)

    @classmethod
    def zeroreg(cls) -> "ForecasterSpec":
        return cls(kind="zeroreg")

    @classmethod
    def mm(cls, feature_schedule=None) -> "ForecasterSpec":
        return cls(kind="mm", feature_schedule=feature_schedule)

    @classmethod
    def biased_zeroreg(cls, lam: float) -> "ForecasterSpec":
        return cls(kind="biased_zeroreg", lam=lam)

    def resolve_prior(self, xs: np.ndarray | None) -> np.ndarray:
        """Gram-matrix metric for 'adapted': explicit prior, schedule, or the run itself."""
        if self.gram_prior is not None:
            return require_symmetric(self.gram_prior, name="gram_prior")
        schedule = self.feature_schedule if self.feature_schedule is not None else xs
        if schedule is None:
            raise ValueError("adapted needs gram_prior or feature_schedule")
        schedule = as_matrix(schedule, name="feature_schedule")
        return schedule.T @ schedule

    def resolve_schedule(self, xs: np.ndarray | None) -> np.ndarray:
        schedule = self.feature_schedule if self.feature_schedule is not None else xs
        if schedule is None:
            raise ValueError("mm needs a feature_schedule")
        return as_matrix(schedule, name="feature_schedule")

    def build(self, d: int, features: np.ndarray | None = None) -> "Forecaster":
        """Instantiate the stateful forecaster, binding schedule defaults."""
        if self.kind == "vaw":
            return VAW(d, self.lam)
        if self.kind == "zeroreg":
            return ZeroReg(d)
        if self.kind == "biased_zeroreg":
            return BiasedZeroReg(d, self.lam)
        if self.kind == "adapted":
            return AdaptedRidge(d, self.lam, self.resolve_prior(features))
        return MM(self.resolve_schedule(features))

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("vaw", "adapted", "biased_zeroreg"):
            out["lambda"] = self.lam
        if self.kind == "adapted":
            out["metric"] = "gram_prior" if self.gram_prior is not None else "schedule"
        return out


class Forecaster:
    """Base class: predict/observe handshake plus Gram bookkeeping."""

    kind = "base"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be >= 1")
        self.d = d
        self.gram = GramState.empty(d)
        self._pending: np.ndarray | None = None

    @property
    def round(self) -> int:
        """1-based index of the round about to be predicted."""
        return self.gram.t + 1

    def weight_vector(self, x: np.ndarray) -> np.ndarray:
        """Weights used for feature x at the current round (x already absorbed)."""
        raise NotImplementedError

    def predict(self, x) -> float:
        x = as_vector(x, d=self.d)
        yhat = float(self.weight_vector(x) @ x)
        self._pending = x
        return yhat

    def observe(self, y: float) -> None:
        if self._pending is None:
            raise RuntimeError("observe() called without a preceding predict()")
        y = float(y)
        if not np.isfinite(y):
            raise ValueError("observation must be finite")
        x = self._pending
        updated = gram_update(self.gram, x)
        self.gram = replace(updated, b=updated.b + y * x)
        self._pending = None


class VAW(Forecaster):
    """Ridge forecaster: weights solve (lam I + G_t) u = b_{t-1}, lam > 0."""

    kind = "vaw"

    def __init__(self, d: int, lam: float):
        if lam <= 0.0:
            raise ValueError("lam must be > 0")
        super().__init__(d)
        self.lam = lam

    def weight_vector(self, x):
        A = self.lam * np.eye(self.d) + self.gram.G + np.outer(x, x)
        return np.linalg.solve(A, self.gram.b)


class ZeroReg(Forecaster):
    """Regularization-free forecaster: weights are pinv(G_t) b_{t-1}.

    Parameter-free; the pseudoinverse selects the minimal-norm weights on
    rank-deficient rounds.
    """

    kind = "zeroreg"

    def weight_vector(self, x):
        G = self.gram.G + np.outer(x, x)
        return pseudoinverse(G) @ self.gram.b


class BiasedZeroReg(ZeroReg):
    """ZeroReg with its output shrunk by 1 / (1 + lam).

    This is what falls out of regularizing with the running Gram matrix as
    the metric: the weight vector is the ZeroReg one times a multiplicative
    bias. Exposed for regression tests showing the shrinkage degrades regret;
    no closed-form bound is attached to it.
    """

    kind = "biased_zeroreg"

    def __init__(self, d: int, lam: float):
        if lam < 0.0:
            raise ValueError("lam must be >= 0")
        super().__init__(d)
        self.lam = lam

    def weight_vector(self, x):
        return super().weight_vector(x) / (1.0 + self.lam)


class AdaptedRidge(Forecaster):
    """Ridge forecaster regularized in the metric of a known Gram matrix.

    Weights are pinv(lam * G_prior + G_t) b_{t-1}; the minimal-norm selection
    comes from the pseudoinverse. Scale invariant: mapping features through an
    invertible matrix while mapping the prior accordingly leaves predictions
    unchanged.
    """

    kind = "adapted"

    def __init__(self, d: int, lam: float, gram_prior):
        if lam < 0.0:
            raise ValueError("lam must be >= 0")
        super().__init__(d)
        self.lam = lam
        self.gram_prior = require_symmetric(as_matrix(gram_prior, shape=(d, d),
                                                      name="gram_prior"),
                                            name="gram_prior")

    def weight_vector(self, x):
        M = self.lam * self.gram_prior + self.gram.G + np.outer(x, x)
        return pseudoinverse(M) @ self.gram.b


class MM(Forecaster):
    """Backward-induction forecaster over a known feature schedule.

    Weights are P_t b_{t-1} where the matrices P_t come from mm_precompute.
    The first-round weights are zero (the moment vector starts at zero).
    """

    kind = "mm"

    def __init__(self, feature_schedule):
        schedule = as_matrix(feature_schedule, name="feature_schedule")
        super().__init__(schedule.shape[1])
        self.schedule = schedule
        self.P = mm_precompute(schedule)

    def weight_vector(self, x):
        t = self.round
        if t > len(self.P):
            raise RuntimeError(f"feature schedule exhausted at round {t} "
                               f"(schedule covers {len(self.P)} rounds)")
        return self.P[t - 1] @ self.gram.b


def mm_precompute(features) -> list[np.ndarray]:
    """Backward recursion of the MM matrices over a feature schedule.

    P_T is the pseudoinverse of the final Gram matrix; each earlier matrix
    adds the rank-one term P_t x_t x_t' P_t.
    """
    xs = _schedule_array(features)
    T = xs.shape[0]
    if T < 1:
        raise ValueError("feature schedule must contain at least one round")
    G_T = xs.T @ xs
    P: list[np.ndarray | None] = [None] * T
    P[T - 1] = pseudoinverse(0.5 * (G_T + G_T.T))
    for t in range(T, 1, -1):
        px = P[t - 1] @ xs[t - 1]
        P[t - 2] = P[t - 1] + np.outer(px, px)
    return P  # type: ignore[return-value]


def mm_condition_check(features) -> tuple[bool, np.ndarray]:
    """Feasibility margins of the MM forecaster on a feature schedule.

    margin[t] sums |x_s' pinv(P_{t+1}) x_{t+1}| over earlier rounds s; the
    schedule is admissible iff every margin is <= 1. Margins are returned
    raw, without rounding near the threshold.
    """
    xs = _schedule_array(features)
    P = mm_precompute(xs)
    T = xs.shape[0]
    margins = np.zeros(T)
    for t in range(2, T + 1):
        Pd = pseudoinverse(P[t - 1])
        margins[t - 1] = float(np.abs(xs[: t - 1] @ (Pd @ xs[t - 1])).sum())
    return bool(np.all(margins <= 1.0)), margins


def _schedule_array(features) -> np.ndarray:
    xs = getattr(features, "xs", features)
    return as_matrix(xs, name="features")


def predict_sequence(forecaster, xs, ys, *, backend: str | None = None) -> np.ndarray:
    """Per-round predictions of a forecaster over a whole transcript.

    ForecasterSpec inputs dispatch to the sequence kernels of the selected
    backend; stateful Forecaster instances are driven round by round. Both
    paths agree (tests pin them together).
    """
    xs = as_matrix(xs, name="xs")
    ys = as_vector(ys, d=xs.shape[0], name="ys")
    if isinstance(forecaster, ForecasterSpec):
        k = get_kernels(backend)
        if forecaster.kind == "vaw":
            return np.asarray(k.vaw_run(xs, ys, forecaster.lam))
        if forecaster.kind == "zeroreg":
            return np.asarray(k.zeroreg_run(xs, ys))
        if forecaster.kind == "biased_zeroreg":
            return np.asarray(k.zeroreg_run(xs, ys)) / (1.0 + forecaster.lam)
        if forecaster.kind == "adapted":
            prior = np.ascontiguousarray(forecaster.resolve_prior(xs))
            return np.asarray(k.adapted_run(xs, ys, forecaster.lam, prior))
        forecaster = forecaster.build(xs.shape[1], features=xs)
    yhat = np.empty(len(ys))
    for t in range(len(ys)):
        yhat[t] = forecaster.predict(xs[t])
        forecaster.observe(ys[t])
    return yhat
