"""Distributionally robust dynamic programming over kernel-embedding
ambiguity sets, with a thermostatically controlled load case study."""

__version__ = "0.1.0"

from .kernels import (
    Gaussian,
    GramMatrix,
    Kernel,
    Product,
    Spline1,
    StateAction,
    Sum,
    gram,
    kernel_eval,
)
from .rkhs import (
    CmeEstimator,
    NumericalError,
    RkhsFunction,
    TransitionDataset,
    cme_embedding,
    cme_weights,
    cme_weights_many,
    empirical_embedding,
    expectation,
    fit_cme,
    mmd,
    rkhs_norm,
)
from .ambiguity import (
    AmbiguityBall,
    Direction,
    TightnessReport,
    support_tightness_check,
    support_value,
    worst_case_expectation,
)
from .dp import (
    PolicyTable,
    StateGrid,
    ValueFunction,
    cost_value_iteration,
    extract_policy_action,
    interpolate,
    safety_value_iteration,
    write_policy_csv,
    write_values_csv,
)
from .tcl import RngSeed, TclParams, generate_dataset, mc_safety_probability, tcl_step
from .config import ConfigError, ExperimentConfig, parse_config_text, validate_config
from .experiment import run_experiment

__all__ = [
    "__version__",
    "Kernel", "Gaussian", "Spline1", "Sum", "Product", "StateAction",
    "GramMatrix", "kernel_eval", "gram",
    "RkhsFunction", "TransitionDataset", "CmeEstimator", "NumericalError",
    "empirical_embedding", "expectation", "mmd",
    "fit_cme", "cme_weights", "cme_weights_many", "cme_embedding", "rkhs_norm",
    "AmbiguityBall", "Direction", "TightnessReport",
    "support_value", "worst_case_expectation", "support_tightness_check",
    "StateGrid", "ValueFunction", "PolicyTable", "interpolate",
    "safety_value_iteration", "cost_value_iteration", "extract_policy_action",
    "write_values_csv", "write_policy_csv",
    "RngSeed", "TclParams", "tcl_step", "generate_dataset", "mc_safety_probability",
    "ExperimentConfig", "ConfigError", "validate_config", "parse_config_text",
    "run_experiment",
]
