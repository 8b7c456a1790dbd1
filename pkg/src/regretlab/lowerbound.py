"""Monte-Carlo probe of the Bayesian-risk lower bound on unit-vector games.

The randomized environment draws a parameter vector from a symmetric Beta
prior, picks one active coordinate per round, and emits Bernoulli
observations. Any forecaster's average per-round estimation error on this
environment is bounded below by a van Trees (Bayesian Cramer-Rao) value that
holds for arbitrary, possibly biased estimators; the experiment checks the
inequality empirically with a 3-standard-error slack.

Convention: the van Trees denominator counts the t-1 observations available
before round t. A variant with t in place of t-1 circulates; we implement
the (t-1) form and do not reconcile the two.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._backend import get_kernels
from .forecasters import ForecasterSpec, predict_sequence
from .regret import offline_optimum

MIN_TRIALS = 30

RUN_SCHEMA = "regretlab/lowerbound/v1"


@dataclass(frozen=True)
class BayesEnvironment:
    """Randomized environment: Beta(alpha, alpha)^d prior, uniform coordinates,
    Bernoulli observations, signed rescaling to [-B, B]."""

    d: int
    T: int
    alpha: float
    B: float
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.T < 1:
            raise ValueError("d and T must be >= 1")
        if self.alpha < 3.0:
            raise ValueError("alpha must be >= 3")
        if self.B < 0.0:
            raise ValueError("B must be >= 0")

    @classmethod
    def with_default_alpha(cls, d: int, T: int, B: float = 1.0,
                           seed: int = 0) -> "BayesEnvironment":
        """alpha = 1 + ln T (floored at the admissible minimum 3)."""
        return cls(d=d, T=T, alpha=max(3.0, 1.0 + math.log(T)), B=B, seed=seed)


@dataclass(frozen=True)
class EnvironmentDraw:
    """One sampled transcript: parameter, coordinates, observations on both scales."""

    theta: np.ndarray  # prior draw in (0, 1)^d
    J: np.ndarray      # active coordinate per round, values in {0, ..., d-1}
    Y: np.ndarray      # Bernoulli observations in {0, 1}
    Z: np.ndarray      # signed observations B * (2Y - 1) in {-B, +B}


def trial_rng(env: BayesEnvironment, trial: int) -> np.random.Generator:
    """Independent, reproducible stream for one trial index."""
    return np.random.default_rng([env.seed, trial])


def sample_environment(env: BayesEnvironment, rng: np.random.Generator,
                       theta=None) -> EnvironmentDraw:
    """Draw one transcript; theta can be forced for deterministic checks.

    The Beta draws come from ratios of two Gamma variates. The full coordinate
    schedule is part of the draw: unit-vector features are known before the
    game starts.
    """
    if theta is None:
        g1 = rng.standard_gamma(env.alpha, env.d)
        g2 = rng.standard_gamma(env.alpha, env.d)
        theta = g1 / (g1 + g2)
    else:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (env.d,):
            raise ValueError(f"theta must have shape ({env.d},)")
        if np.any(theta < 0.0) or np.any(theta > 1.0):
            raise ValueError("theta entries must lie in [0, 1]")
    J = rng.integers(0, env.d, size=env.T)
    Y = (rng.random(env.T) < theta[J]).astype(float)
    Z = env.B * (2.0 * Y - 1.0)
    return EnvironmentDraw(theta=theta, J=J, Y=Y, Z=Z)


def van_trees_rhs(d: int, t: int, alpha: float) -> float:
    """Lower bound on the prior-averaged squared estimation error at round t.

    d^2 / (16 d alpha + 4 (t-1) + 2 (t-1) / (alpha-1)); decreasing in t and
    valid for any estimator built from the first t-1 observations.
    """
    if alpha < 3.0:
        raise ValueError("alpha must be >= 3")
    if t < 1:
        raise ValueError("t must be >= 1")
    return d ** 2 / (16.0 * d * alpha + 4.0 * (t - 1) + 2.0 * (t - 1) / (alpha - 1.0))


def prior_fisher_trace(d: int, alpha: float) -> float:
    """Fisher information trace of the product Beta(alpha, alpha)^d prior.

    Closed form 4 d (2 alpha - 1)(alpha - 1) / (alpha - 2); at most 16 d alpha
    once alpha >= 3. Matches direct quadrature of the univariate integral.
    """
    if alpha <= 2.0:
        raise ValueError("alpha must be > 2")
    return 4.0 * d * (2.0 * alpha - 1.0) * (alpha - 1.0) / (alpha - 2.0)


def model_fisher_trace(d: int, t: int, theta) -> float:
    """Fisher information trace of the sampling model at theta before round t.

    sum_i (t-1) / (d * theta_i * (1 - theta_i)); zero at t = 1 since nothing
    has been observed yet.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0) or np.any(theta >= 1.0):
        raise ValueError("theta entries must lie strictly inside (0, 1)")
    return float(np.sum((t - 1) / (d * theta * (1.0 - theta))))


@dataclass
class LowerBoundRun:
    """Per-round Bayes-risk estimates with their van Trees reference values."""

    per_round_risk: np.ndarray
    per_round_se: np.ndarray
    van_trees_rhs: np.ndarray
    trials: int
    env: BayesEnvironment
    forecaster: dict

    @property
    def holds(self) -> bool:
        """risk >= reference - 3 SE for every round."""
        return bool(np.all(self.per_round_risk
                           >= self.van_trees_rhs - 3.0 * self.per_round_se))

    def to_dict(self) -> dict:
        return {
            "schema": RUN_SCHEMA,
            "env": {"d": self.env.d, "T": self.env.T, "alpha": self.env.alpha,
                    "B": self.env.B, "seed": self.env.seed},
            "forecaster": self.forecaster,
            "trials": self.trials,
            "per_round_risk": [float(v) for v in self.per_round_risk],
            "per_round_se": [float(v) for v in self.per_round_se],
            "van_trees_rhs": [float(v) for v in self.van_trees_rhs],
            "holds": self.holds,
        }


@dataclass
class RegretLowerResult:
    """Monte-Carlo estimate of the expected uniform regret on the signed game."""

    estimate: float
    se: float
    reference: float
    trials: int

    @property
    def holds(self) -> bool:
        return self.estimate >= self.reference - 3.0 * self.se


def bayes_risk_estimate(forecaster, env: BayesEnvironment, trials: int, *,
                        theta=None, backend: str | None = None) -> LowerBoundRun:
    """Average per-round estimation error of a forecaster on the [0, 1]-scale game.

    Per trial: sample the environment, run the forecaster on unit-vector
    features with Bernoulli observations, and record the squared distance
    between the parameter and the vector of hypothetical predictions (entry j
    is the prediction the forecaster would issue were coordinate j active).
    Trials parallelize by index (REGRETLAB_THREADS caps the pool); results do
    not depend on the thread count.

    `forecaster` is a ForecasterSpec or a callable mapping a (T, d) feature
    schedule to a fresh object with the predict/observe interface.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}; standard errors are "
                         "meaningless below that")
    T, d = env.T, env.d
    risks = np.empty((trials, T))

    def run_trial(i: int) -> None:
        draw = sample_environment(env, trial_rng(env, i), theta=theta)
        preds = _unit_predictions(forecaster, draw.J, draw.Y, d, backend=backend)
        risks[i] = ((preds - draw.theta) ** 2).sum(axis=1)

    _for_each_trial(run_trial, trials)
    rhs = np.array([van_trees_rhs(d, t, env.alpha) for t in range(1, T + 1)])
    return LowerBoundRun(
        per_round_risk=risks.mean(axis=0),
        per_round_se=risks.std(axis=0, ddof=1) / math.sqrt(trials),
        van_trees_rhs=rhs,
        trials=trials,
        env=env,
        forecaster=_describe(forecaster),
    )


def regret_lower_experiment(env: BayesEnvironment, forecaster, trials: int, *,
                            backend: str | None = None) -> RegretLowerResult:
    """Expected uniform regret of a forecaster on the [-B, B]-scale game.

    The returned reference is 4 B^2 / d times the summed van Trees values:
    the randomized environment forces at least that much regret on average,
    so estimate >= reference - 3 SE is the checkable contract.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"trials must be >= {MIN_TRIALS}")
    eye = np.eye(env.d)
    regrets = np.empty(trials)

    def run_trial(i: int) -> None:
        draw = sample_environment(env, trial_rng(env, i))
        xs = eye[draw.J]
        yhat = _sequence_predictions(forecaster, xs, draw.Z, backend=backend)
        cum = float(np.sum((draw.Z - yhat) ** 2))
        _, offline = offline_optimum(xs, draw.Z)
        regrets[i] = cum - offline

    _for_each_trial(run_trial, trials)
    reference = 4.0 * env.B ** 2 / env.d * sum(
        van_trees_rhs(env.d, t, env.alpha) for t in range(1, env.T + 1))
    return RegretLowerResult(
        estimate=float(regrets.mean()),
        se=float(regrets.std(ddof=1) / math.sqrt(trials)),
        reference=float(reference),
        trials=trials,
    )


class SignedScaleForecaster:
    """Adapter running a [0, 1]-scale forecaster on the [-B, B]-scale game.

    Predictions map through z = 2B (y - 1/2) and observations through the
    inverse; on unit-vector features the adapted run's uniform regret is
    exactly 4 B^2 times the original's.
    """

    def __init__(self, inner, B: float):
        if B <= 0.0:
            raise ValueError("B must be > 0")
        self.inner = inner
        self.B = B

    def predict(self, x) -> float:
        return 2.0 * self.B * (self.inner.predict(x) - 0.5)

    def observe(self, z: float) -> None:
        self.inner.observe(z / (2.0 * self.B) + 0.5)


def _unit_predictions(forecaster, J: np.ndarray, obs: np.ndarray, d: int, *,
                      backend: str | None) -> np.ndarray:
    """(T, d) hypothetical predictions on a unit-vector game."""
    if isinstance(forecaster, ForecasterSpec) and forecaster.kind == "vaw":
        k = get_kernels(backend)
        return np.asarray(k.vaw_unit_game(np.ascontiguousarray(J, dtype=np.int64),
                                          np.ascontiguousarray(obs, dtype=float),
                                          d, forecaster.lam))
    eye = np.eye(d)
    instance = _fresh_instance(forecaster, eye[J])
    T = len(J)
    preds = np.empty((T, d))
    for t in range(T):
        for j in range(d):
            preds[t, j] = instance.predict(eye[j])
        instance.predict(eye[J[t]])
        instance.observe(obs[t])
    return preds


def _sequence_predictions(forecaster, xs: np.ndarray, ys: np.ndarray, *,
                          backend: str | None) -> np.ndarray:
    if isinstance(forecaster, ForecasterSpec):
        return predict_sequence(forecaster, xs, ys, backend=backend)
    instance = _fresh_instance(forecaster, xs)
    return predict_sequence(instance, xs, ys, backend=backend)


def _fresh_instance(forecaster, features: np.ndarray):
    if isinstance(forecaster, ForecasterSpec):
        return forecaster.build(features.shape[1], features=features)
    if callable(forecaster):
        return forecaster(features)
    raise TypeError("forecaster must be a ForecasterSpec or a callable "
                    "features -> forecaster instance")


def _describe(forecaster) -> dict:
    if isinstance(forecaster, ForecasterSpec):
        return forecaster.describe()
    return {"kind": getattr(forecaster, "__name__", type(forecaster).__name__)}


def _for_each_trial(fn, trials: int) -> None:
    n_threads = _backend.threads()
    if n_threads <= 1:
        for i in range(trials):
            fn(i)
        return
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        list(pool.map(fn, range(trials)))
