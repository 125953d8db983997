"""Mixture cure models with a presmoothing 2-step incidence estimator.

The package fits logistic-Cox mixture cure models two ways: classic EM
maximum likelihood, and a 2-step procedure that first estimates cure
probabilities nonparametrically along a preliminary one-dimensional index
and then projects them onto the logistic class. Bootstrap inference,
prediction-error comparison and a Monte Carlo benchmarking harness are
included.
"""

from .cox import CoxFit, fit_cox, partial_loglik, partial_loglik_gradient, uncured_survival
from .data import Dataset, StepFunction, Subject
from .em import EmConfig, MixtureCureFit, e_step, fit_em, observed_loglik, refit_latency
from .errors import (
    BandwidthSelectionError,
    CoxDivergenceError,
    CureMixError,
    DegenerateNeighborhoodError,
    InferenceUnreliableError,
    InvalidInputError,
    SingularDesignError,
)
from .inference import (
    InferenceReport,
    PredictionErrorResult,
    bootstrap_inference,
    pe_comparison,
    prediction_error,
)
from .kernels import EPANECHNIKOV, Kernel, epanechnikov, silverman_bandwidth
from .logistic import LogisticFit, fit_fractional_logistic, phi, sigmoid, trim_by_index_density
from .simulation import (
    MonteCarloReport,
    MonteCarloRow,
    ScenarioConfig,
    SimulatedSample,
    TABLE1_CATALOG,
    generate_dataset,
    run_monte_carlo,
)
from .survival_core import (
    beran_survival,
    conditional_cure_probs,
    cv_bandwidth,
    default_bandwidth_grid,
    kaplan_meier,
    nonparametric_cure_prob,
)
from .two_step import TwoStepFit, fit_two_step, two_step_with_em_preliminary

__version__ = "0.1.0"

__all__ = [
    "BandwidthSelectionError",
    "CoxDivergenceError",
    "CoxFit",
    "CureMixError",
    "Dataset",
    "DegenerateNeighborhoodError",
    "EPANECHNIKOV",
    "EmConfig",
    "InferenceReport",
    "InferenceUnreliableError",
    "InvalidInputError",
    "Kernel",
    "LogisticFit",
    "MixtureCureFit",
    "MonteCarloReport",
    "MonteCarloRow",
    "PredictionErrorResult",
    "ScenarioConfig",
    "SimulatedSample",
    "SingularDesignError",
    "StepFunction",
    "Subject",
    "TABLE1_CATALOG",
    "TwoStepFit",
    "beran_survival",
    "bootstrap_inference",
    "conditional_cure_probs",
    "cv_bandwidth",
    "default_bandwidth_grid",
    "e_step",
    "epanechnikov",
    "fit_cox",
    "fit_em",
    "fit_fractional_logistic",
    "fit_two_step",
    "generate_dataset",
    "kaplan_meier",
    "nonparametric_cure_prob",
    "observed_loglik",
    "partial_loglik",
    "partial_loglik_gradient",
    "pe_comparison",
    "phi",
    "prediction_error",
    "refit_latency",
    "run_monte_carlo",
    "sigmoid",
    "silverman_bandwidth",
    "trim_by_index_density",
    "two_step_with_em_preliminary",
    "uncured_survival",
]
