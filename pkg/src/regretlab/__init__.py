"""Online linear regression with uniform-regret accounting.

Four forecasters behind one predict/observe interface, every closed-form
regret bound they satisfy, and a Monte-Carlo probe of the Bayesian-risk
lower bound. See the README for the CLI and the `verify` suite.
"""

__version__ = "0.1.0"

from ._backend import BACKEND, get_kernels
from .cli import ExperimentConfig
from .forecasters import (MM, VAW, AdaptedRidge, BiasedZeroReg, Forecaster,
                          ForecasterSpec, RoundRecord, ZeroReg,
                          mm_condition_check, mm_precompute, predict_sequence)
from .linalg import (GramState, ReducedBasis, det_ratio_identity,
                     eigen_product_identity, gram_update, penrose_check,
                     pinv_sqrt, pseudoinverse, quad_form_pinv, reduced_basis)
from .lowerbound import (BayesEnvironment, EnvironmentDraw, LowerBoundRun,
                         RegretLowerResult, SignedScaleForecaster,
                         bayes_risk_estimate, model_fisher_trace,
                         prior_fisher_trace, regret_lower_experiment,
                         sample_environment, van_trees_rhs)
from .regret import (RegretReport, bound_adapted, bound_adapted_optimized,
                     bound_vaw, bound_vaw_uniform, bound_zeroreg, evaluate,
                     lower_bound_value, offline_optimum, uniform_regret)
from .sequences import (FeatureSequence, apply_linear_map, gen_decaying,
                        gen_gaussian, load_csv, save_csv, warmup_prefix)

__all__ = [
    "BACKEND",
    "AdaptedRidge",
    "ExperimentConfig",
    "BayesEnvironment",
    "BiasedZeroReg",
    "EnvironmentDraw",
    "FeatureSequence",
    "Forecaster",
    "ForecasterSpec",
    "GramState",
    "LowerBoundRun",
    "MM",
    "ReducedBasis",
    "RegretLowerResult",
    "RegretReport",
    "RoundRecord",
    "SignedScaleForecaster",
    "VAW",
    "ZeroReg",
    "apply_linear_map",
    "bayes_risk_estimate",
    "bound_adapted",
    "bound_adapted_optimized",
    "bound_vaw",
    "bound_vaw_uniform",
    "bound_zeroreg",
    "det_ratio_identity",
    "eigen_product_identity",
    "evaluate",
    "gen_decaying",
    "gen_gaussian",
    "get_kernels",
    "gram_update",
    "load_csv",
    "lower_bound_value",
    "mm_condition_check",
    "mm_precompute",
    "model_fisher_trace",
    "offline_optimum",
    "penrose_check",
    "pinv_sqrt",
    "predict_sequence",
    "prior_fisher_trace",
    "pseudoinverse",
    "quad_form_pinv",
    "reduced_basis",
    "regret_lower_experiment",
    "sample_environment",
    "save_csv",
    "uniform_regret",
    "van_trees_rhs",
    "warmup_prefix",
]
