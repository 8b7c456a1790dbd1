"""Offline optimum, uniform regret, and the closed-form regret bounds.

Every bound evaluator takes the quantities it needs explicitly so it can be
checked against hand arithmetic; ``evaluate`` runs the full online protocol,
fills in all bounds applicable to the forecaster, and records a pass/fail
verdict for each one. Verdicts use a relative slack of BOUND_SLACK to absorb
floating-point noise in synthetically tight cases; negative regret is
reported as is.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import get_kernels
from .forecasters import ForecasterSpec, RoundRecord, mm_condition_check, predict_sequence
from .linalg import (NEAR_CUTOFF_FACTOR, RANK_RCOND, as_matrix, as_vector,
                     pseudoinverse, rank_cutoff)
from .sequences import FeatureSequence

BOUND_SLACK = 1e-9

REPORT_SCHEMA = "regretlab/report/v1"


def offline_optimum(xs, ys) -> tuple[np.ndarray, float]:
    """Best fixed linear predictor in hindsight and its cumulative loss.

    The minimal-norm minimizer is pinv(G_T) b_T; it satisfies the normal
    equations even when the final Gram matrix is rank deficient.
    """
    xs = as_matrix(xs, name="xs")
    ys = as_vector(ys, d=xs.shape[0], name="ys")
    G = xs.T @ xs
    b = xs.T @ ys
    u_star = pseudoinverse(0.5 * (G + G.T)) @ b
    loss = float(np.sum((ys - xs @ u_star) ** 2))
    return u_star, loss


def uniform_regret(cum_loss: float, offline_loss: float) -> float:
    """Cumulative loss minus the offline optimum; may be negative."""
    return float(cum_loss) - float(offline_loss)


def bound_vaw(lam: float, eigs, B: float, u_norm: float) -> float:
    """Regret bound of the ridge forecaster against a comparator of given norm.

    lam * |u|^2 + B^2 * sum_k log(1 + eig_k / lam) over the final Gram spectrum.
    """
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    eigs = np.maximum(np.asarray(eigs, dtype=float), 0.0)
    return float(lam * u_norm ** 2 + B ** 2 * np.sum(np.log1p(eigs / lam)))


def bound_vaw_uniform(lam: float, r_T: int, lam_min_pos: float, T: int,
                      X: float, B: float) -> float:
    """Uniform regret bound of the ridge forecaster under a feature-norm cap X.

    r_T B^2 log(1 + T X^2 / (r_T lam)) + (lam / lam_min_pos) T B^2, where
    lam_min_pos is the smallest positive eigenvalue of the final Gram matrix.
    """
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if lam_min_pos <= 0.0:
        raise ValueError("lam_min_pos must be > 0")
    if r_T < 1:
        raise ValueError("r_T must be >= 1")
    return float(r_T * B ** 2 * math.log1p(T * X ** 2 / (r_T * lam))
                 + (lam / lam_min_pos) * T * B ** 2)


def bound_adapted(lam: float, r_T: int, T: int, B: float) -> float:
    """Uniform regret bound of the Gram-metric ridge forecaster.

    lam T B^2 + r_T B^2 log(1 + 1/lam); holds for every feature sequence with
    final rank r_T and observations bounded by B.
    """
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    return float(lam * T * B ** 2 + r_T * B ** 2 * math.log1p(1.0 / lam))


def bound_adapted_optimized(r_T: int, T: int, B: float) -> float:
    """bound_adapted at its minimizing choice lam = r_T / T: r_T B^2 (1 + log(1 + T/r_T))."""
    if r_T < 1:
        raise ValueError("r_T must be >= 1")
    return float(r_T * B ** 2 * (1.0 + math.log1p(T / r_T)))


def bound_zeroreg(features, B: float, *, backend: str | None = None) -> tuple[float, float]:
    """Both forms of the regularization-free forecaster's uniform regret bound.

    exact      B^2 * sum_t x_t' pinv(G_t) x_t
    eigenForm  B^2 * (sum_{k<=r_T} log eig_k(G_T)
               + sum over rank-increase rounds of log(1 / smallest positive eig)
               + r_T)

    The exact form never exceeds the eigen form (up to floating-point noise).
    """
    xs = _features_array(features)
    if not np.any(np.linalg.norm(xs, axis=1) > 0.0):
        raise ValueError("all features are null; the bound is undefined")
    if B == 0.0:
        return 0.0, 0.0
    eigs, quad = get_kernels(backend).gram_stream(xs)
    exact = float(B ** 2 * np.sum(quad))
    ranks, events = _rank_events(eigs)
    r_T = int(ranks[-1])
    log_final = float(np.sum(np.log(eigs[-1, :r_T])))
    log_entry = -float(sum(math.log(eigs[t - 1, ranks[t - 1] - 1]) for t in events))
    eigen_form = float(B ** 2 * (log_final + log_entry + r_T))
    return exact, eigen_form


def lower_bound_value(d: int, T: int, B: float) -> float:
    """Minimax benchmark d B^2 (ln T - (3 + ln d) - ln ln T), defined for T >= 8.

    A statement about the best possible forecaster on worst-case data, not a
    per-sequence bound; reported as is even when negative (vacuous).
    """
    if T < 8:
        raise ValueError("T must be >= 8")
    if d < 1:
        raise ValueError("d must be >= 1")
    return float(d * B ** 2 * (math.log(T) - (3.0 + math.log(d)) - math.log(math.log(T))))


@dataclass
class RegretReport:
    """Everything measured in one evaluation run."""

    forecaster: dict
    d: int
    T: int
    B: float
    X: float | None
    x_norm_max: float
    records: list[RoundRecord]
    cum_loss: float
    offline_loss: float
    uniform_regret: float
    u_star: np.ndarray
    rank: int
    bounds: dict[str, float]
    verdicts: dict[str, bool]
    inapplicable: list[str] = field(default_factory=list)
    mm_condition: dict | None = None
    zeroreg_exact_le_eigen: bool | None = None
    eig_near_cutoff: bool = False
    minimax_reference: float | None = None
    config: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def to_dict(self, include_rounds: bool = True) -> dict:
        out = {
            "schema": REPORT_SCHEMA,
            "forecaster": self.forecaster,
            "d": self.d,
            "T": self.T,
            "B": self.B,
            "X": self.X,
            "x_norm_max": self.x_norm_max,
            "cum_loss": self.cum_loss,
            "offline_loss": self.offline_loss,
            "uniform_regret": self.uniform_regret,
            "u_star": [float(v) for v in self.u_star],
            "rank": self.rank,
            "bounds": self.bounds,
            "verdicts": self.verdicts,
            "all_pass": self.all_pass,
            "inapplicable": self.inapplicable,
            "mm_condition": self.mm_condition,
            "zeroreg_exact_le_eigen": self.zeroreg_exact_le_eigen,
            "eig_near_cutoff": self.eig_near_cutoff,
            "minimax_reference": self.minimax_reference,
            "config": self.config,
        }
        if include_rounds:
            out["rounds"] = [{"t": r.t, "x": [float(v) for v in r.x],
                              "yhat": r.yhat, "y": r.y, "loss": r.loss}
                             for r in self.records]
        return out


def verdict(regret: float, bound: float) -> bool:
    """regret <= bound with relative slack BOUND_SLACK."""
    return regret <= bound + BOUND_SLACK * max(1.0, abs(bound))


def evaluate(spec: ForecasterSpec, features, ys=None, B: float | None = None,
             X: float | None = None, *, use_empirical_x: bool = False,
             backend: str | None = None) -> RegretReport:
    """Run the online protocol and report regret against every applicable bound.

    B defaults to the largest |y_t| (the tightest valid choice); observations
    exceeding a user-supplied B abort rather than being clipped. X is a
    feature-norm cap used by the uniform ridge bound; without one, that bound
    is marked inapplicable unless use_empirical_x is set.
    """
    xs, ys = _coerce_game(features, ys)
    T, d = xs.shape
    y_max = float(np.abs(ys).max())
    if B is None:
        B_used = y_max
    else:
        if y_max > B * (1.0 + 1e-12) + 1e-300:
            raise ValueError(f"observation magnitude {y_max} exceeds the stated "
                             f"bound B={B}; refusing to clip")
        B_used = float(B)

    yhat = predict_sequence(spec, xs, ys, backend=backend)
    losses = (ys - yhat) ** 2
    records = [RoundRecord(t=t + 1, x=xs[t], yhat=float(yhat[t]), y=float(ys[t]),
                           loss=float(losses[t])) for t in range(T)]
    cum_loss = float(losses.sum())
    u_star, offline_loss = offline_optimum(xs, ys)
    regret = uniform_regret(cum_loss, offline_loss)

    eigs, _quad = get_kernels(backend).gram_stream(xs)
    ranks, _events = _rank_events(eigs)
    r_T = int(ranks[-1])
    final_eigs = eigs[-1]
    lam_min_pos = float(final_eigs[r_T - 1]) if r_T >= 1 else 0.0

    x_norm_max = float(np.linalg.norm(xs, axis=1).max())
    X_used = X if X is not None else (x_norm_max if use_empirical_x else None)

    bounds: dict[str, float] = {}
    verdicts: dict[str, bool] = {}
    inapplicable: list[str] = []
    mm_condition = None
    exact_le_eigen = None

    if spec.kind == "vaw":
        bounds["vaw"] = bound_vaw(spec.lam, final_eigs, B_used,
                                  float(np.linalg.norm(u_star)))
        verdicts["vaw"] = verdict(regret, bounds["vaw"])
        if X_used is None:
            inapplicable.append("vaw_uniform: no feature-norm bound X supplied "
                                "(pass X or use_empirical_x=True)")
        elif r_T < 1:
            inapplicable.append("vaw_uniform: final Gram matrix has rank 0")
        else:
            bounds["vaw_uniform"] = bound_vaw_uniform(spec.lam, r_T, lam_min_pos,
                                                      T, X_used, B_used)
            verdicts["vaw_uniform"] = verdict(regret, bounds["vaw_uniform"])
    elif spec.kind == "adapted":
        if spec.lam <= 0.0:
            inapplicable.append("adapted: bound requires lam > 0")
        else:
            bounds["adapted"] = bound_adapted(spec.lam, r_T, T, B_used)
            verdicts["adapted"] = verdict(regret, bounds["adapted"])
        if r_T >= 1:
            bounds["adapted_optimized"] = bound_adapted_optimized(r_T, T, B_used)
            if abs(spec.lam - r_T / T) <= 1e-12 * max(1.0, r_T / T):
                verdicts["adapted_optimized"] = verdict(regret, bounds["adapted_optimized"])
            else:
                inapplicable.append("adapted_optimized: forecaster was not run "
                                    "with lam = rank/T; value reported without verdict")
    elif spec.kind == "zeroreg":
        if r_T < 1:
            inapplicable.append("zeroreg bounds: every feature is null")
        else:
            exact, eigen_form = bound_zeroreg(xs, B_used, backend=backend)
            bounds["zeroreg_exact"] = exact
            bounds["zeroreg_eigen"] = eigen_form
            verdicts["zeroreg_exact"] = verdict(regret, exact)
            verdicts["zeroreg_eigen"] = verdict(regret, eigen_form)
            exact_le_eigen = exact <= eigen_form + BOUND_SLACK * max(1.0, abs(eigen_form))
    elif spec.kind == "mm":
        ok, margins = mm_condition_check(spec.resolve_schedule(xs))
        mm_condition = {"ok": ok, "max_margin": float(margins.max())}
        if r_T >= 1:
            bounds["mm_conditional"] = bound_adapted_optimized(r_T, T, B_used)
            if ok:
                verdicts["mm_conditional"] = verdict(regret, bounds["mm_conditional"])
            else:
                inapplicable.append("mm_conditional: feasibility margins exceed 1; "
                                    "value reported without verdict")
    else:  # biased_zeroreg
        inapplicable.append(f"{spec.kind}: no closed-form bound attached")

    cut = rank_cutoff(float(final_eigs[0]), d)
    near = bool(cut > 0.0 and np.any((final_eigs > cut / NEAR_CUTOFF_FACTOR)
                                     & (final_eigs < cut * NEAR_CUTOFF_FACTOR)))

    return RegretReport(
        forecaster=spec.describe(),
        d=d, T=T, B=B_used, X=X_used, x_norm_max=x_norm_max,
        records=records, cum_loss=cum_loss, offline_loss=offline_loss,
        uniform_regret=regret, u_star=u_star, rank=r_T,
        bounds=bounds, verdicts=verdicts, inapplicable=inapplicable,
        mm_condition=mm_condition, zeroreg_exact_le_eigen=exact_le_eigen,
        eig_near_cutoff=near,
        minimax_reference=lower_bound_value(d, T, B_used) if T >= 8 else None,
    )


def _coerce_game(features, ys) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(features, FeatureSequence):
        if ys is not None:
            raise ValueError("pass observations inside the FeatureSequence "
                             "or as a separate array, not both")
        return features.xs, features.ys
    xs = as_matrix(features, name="features")
    if ys is None:
        raise ValueError("observations are required")
    return xs, as_vector(ys, d=xs.shape[0], name="ys")


def _features_array(features) -> np.ndarray:
    xs = getattr(features, "xs", features)
    return as_matrix(xs, name="features")


def _rank_events(eigs: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Per-round numerical ranks and the 1-based rounds where rank increased."""
    T, d = eigs.shape
    cuts = d * np.maximum(eigs[:, 0], 0.0) * RANK_RCOND
    ranks = (eigs > cuts[:, None]).sum(axis=1)
    events = [t + 1 for t in range(T) if ranks[t] > (ranks[t - 1] if t else 0)]
    return ranks, events
