"""Bayesian recovery of a time-dependent thermal conductivity from radial heat data."""

__version__ = "0.1.0"

from .conductivity import ConductivityKnots, ConstraintConfig, in_Q, knots_from_function, violations
from .errors import HpcondError, InputError, NumericalError
from .experiment import Scenario, generate_data, get_scenario, propagate_uncertainty
from .forward import ObservationSpec, PdeConfig, TemperatureField, default_pde, forward_map, solve
from .gmrf import GmrfConditional, HyperPrior, build_precision, condition_on_first
from .rng import make_rng
from .sampler import (
    ChainRecord,
    Dataset,
    PosteriorModel,
    estimators,
    k_quantile_bands,
    mh_step_reference,
    run_chain,
    sve_step,
)
from .twalk import TwalkParams, twalk_propose

__all__ = [
    "ChainRecord",
    "ConductivityKnots",
    "ConstraintConfig",
    "Dataset",
    "GmrfConditional",
    "HpcondError",
    "HyperPrior",
    "InputError",
    "NumericalError",
    "ObservationSpec",
    "PdeConfig",
    "PosteriorModel",
    "Scenario",
    "TemperatureField",
    "TwalkParams",
    "build_precision",
    "condition_on_first",
    "default_pde",
    "estimators",
    "forward_map",
    "generate_data",
    "get_scenario",
    "in_Q",
    "k_quantile_bands",
    "knots_from_function",
    "make_rng",
    "mh_step_reference",
    "propagate_uncertainty",
    "run_chain",
    "solve",
    "sve_step",
    "twalk_propose",
    "violations",
]
