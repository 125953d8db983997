"""Bootstrap standard errors, Wald p-values and prediction-error comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .em import EmConfig, e_step, fit_em
from .errors import CureMixError, InferenceUnreliableError, InvalidInputError
from .logistic import sigmoid
from .parallel import parallel_map
from .two_step import fit_two_step

_SE_DEGENERATE = 1e-12

ESTIMATORS = ("em", "two_step")


@dataclass
class InferenceReport:
    """Estimates with naive-bootstrap standard errors and Wald p-values.

    ``degenerate`` flags parameters whose bootstrap SE collapsed below
    1e-12; their p-values are NaN.
    """

    parameter_names: list
    estimates: np.ndarray
    standard_errors: np.ndarray
    p_values: np.ndarray
    n_bootstrap: int
    n_bootstrap_failed: int
    degenerate: np.ndarray = field(default_factory=lambda: np.array([], dtype=bool))


@dataclass
class PredictionErrorResult:
    pe_two_step: float
    pe_em: float
    split_seed: int


def _point_estimates(dataset: Dataset, estimator: str, em_config, trim_threshold):
    if estimator == "em":
        fit = fit_em(dataset, em_config)
    elif estimator == "two_step":
        preliminary = fit_em(dataset, em_config)
        fit = fit_two_step(dataset, preliminary, trim_threshold=trim_threshold,
                           em_config=em_config)
    else:
        raise InvalidInputError(f"unknown estimator {estimator!r}; use one of {ESTIMATORS}")
    return np.concatenate([fit.gamma, fit.beta]), fit


def _bootstrap_worker(args):
    dataset, estimator, seed, replicate, em_config, trim_threshold = args
    rng = np.random.default_rng([seed, replicate])
    idx = rng.integers(0, dataset.n, dataset.n)
    try:
        values, _ = _point_estimates(dataset.subset(idx), estimator, em_config,
                                     trim_threshold)
    except CureMixError:
        return None
    if not np.all(np.isfinite(values)):
        return None
    return values


def bootstrap_inference(
    dataset: Dataset,
    estimator: str = "two_step",
    n_bootstrap: int = 500,
    seed: int = 0,
    em_config: EmConfig | None = None,
    trim_threshold: float = 0.0,
    parameter_names=None,
    n_jobs=None,
) -> InferenceReport:
    """Naive bootstrap: resample subjects with replacement and refit.

    Standard errors are sample standard deviations over the successful
    resamples; p-values are two-sided normal Wald. Resamples that fail
    structurally (no events drawn, singular design, divergence) are
    excluded and counted; more than 50% failures raises
    InferenceUnreliableError. Resamples where the EM merely fails to
    converge still contribute their (finite) estimates.
    """
    if n_bootstrap < 2:
        raise InvalidInputError("n_bootstrap must be at least 2")
    point, _ = _point_estimates(dataset, estimator, em_config, trim_threshold)

    tasks = [
        (dataset, estimator, seed, b, em_config, trim_threshold)
        for b in range(n_bootstrap)
    ]
    draws = [d for d in parallel_map(_bootstrap_worker, tasks, n_jobs=n_jobs) if d is not None]
    n_failed = n_bootstrap - len(draws)
    if n_failed > n_bootstrap / 2:
        raise InferenceUnreliableError(
            f"{n_failed}/{n_bootstrap} bootstrap resamples failed"
        )

    stacked = np.vstack(draws)
    se = stacked.std(axis=0, ddof=1)
    degenerate = se < _SE_DEGENERATE
    z = np.abs(point) / np.where(degenerate, np.nan, se)
    p_values = np.array([2.0 * _normal_sf(v) if np.isfinite(v) else np.nan for v in z])

    if parameter_names is None:
        p1 = dataset.p + 1
        parameter_names = [f"gamma{i + 1}" for i in range(p1)] + [
            f"beta{j + 1}" for j in range(point.size - p1)
        ]
    return InferenceReport(
        parameter_names=list(parameter_names),
        estimates=point,
        standard_errors=se,
        p_values=p_values,
        n_bootstrap=n_bootstrap,
        n_bootstrap_failed=n_failed,
        degenerate=degenerate,
    )


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def prediction_error(train: Dataset, test: Dataset, fit) -> float:
    """Negative log score of predicted uncure probabilities on a test set.

    ``fit`` may be a MixtureCureFit or a TwoStepFit trained on ``train``;
    posterior uncure weights for the test subjects use the fitted
    parameters with the zero-tail completion.
    """
    if train.p != test.p or train.q != test.q:
        raise InvalidInputError("train and test covariate dimensions differ")
    w = e_step(fit.gamma, fit.beta, fit.baseline_cum_hazard, test)
    probs = np.clip(sigmoid(test.design_matrix() @ fit.gamma), 1e-10, 1.0 - 1e-10)
    return float(-np.sum(w * np.log(probs) + (1.0 - w) * np.log(1.0 - probs)))


def _pe_split_worker(args):
    dataset, seed, split, em_config, trim_threshold = args
    rng = np.random.default_rng([seed, split])
    perm = rng.permutation(dataset.n)
    n_train = math.ceil(2 * dataset.n / 3)
    try:
        train = dataset.subset(perm[:n_train])
        test = dataset.subset(perm[n_train:])
        em_fit = fit_em(train, em_config)
        ts_fit = fit_two_step(train, em_fit, trim_threshold=trim_threshold,
                              em_config=em_config)
        return (
            prediction_error(train, test, ts_fit),
            prediction_error(train, test, em_fit),
        )
    except CureMixError:
        return (float("nan"), float("nan"))


def pe_comparison(
    dataset: Dataset,
    n_splits: int,
    seed: int = 0,
    em_config: EmConfig | None = None,
    trim_threshold: float = 0.0,
    n_jobs=None,
) -> list[PredictionErrorResult]:
    """Repeated random 2:1 train/test splits, both estimators fit per split.

    The train part receives ceil(2n/3) subjects. Splits where either fit
    fails structurally are reported with NaN prediction errors so callers
    can exclude them from summaries.
    """
    if n_splits < 1:
        raise InvalidInputError("n_splits must be at least 1")
    tasks = [(dataset, seed, s, em_config, trim_threshold) for s in range(n_splits)]
    pairs = parallel_map(_pe_split_worker, tasks, n_jobs=n_jobs)
    return [
        PredictionErrorResult(pe_two_step=ts, pe_em=em, split_seed=s)
        for s, (ts, em) in enumerate(pairs)
    ]
