"""EM maximum likelihood for the logistic-Cox mixture cure model.

The latent cure status is integrated out by alternating posterior uncure
weights (E-step) with a fractional-logistic incidence fit and a weighted
Cox latency fit (M-steps). Non-convergence within the iteration budget is
reported, not raised: the Monte Carlo harness counts such runs the same
way the benchmark study does.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .cox import CoxEngine
from .data import Dataset, StepFunction
from .errors import CoxDivergenceError, InvalidInputError, SingularDesignError
from .logistic import fit_fractional_logistic, sigmoid


@dataclass
class EmConfig:
    """Iteration budget and tolerances for the EM loop.

    ``param_tolerance`` is on the relative infinity-norm change of the
    stacked (gamma, beta) vector per iteration. ``clamp_epsilon`` keeps
    probabilities away from 0 and 1 inside likelihood evaluations.
    ``keep_parameter_trace`` retains per-iteration parameters for
    diagnostics and testing.

    The default iteration budget is calibrated so that the non-convergence
    frequency on heavy-censoring scenarios is comparable with the reference
    EM implementation (which uses a looser per-step tolerance with a
    smaller budget).
    """

    max_iterations: int = 250
    param_tolerance: float = 1e-7
    clamp_epsilon: float = 1e-10
    keep_parameter_trace: bool = False

    def __post_init__(self):
        if self.max_iterations <= 0 or self.param_tolerance <= 0 or self.clamp_epsilon <= 0:
            raise InvalidInputError("EmConfig values must be positive")


@dataclass
class MixtureCureFit:
    """Fitted (gamma, beta, baseline cumulative hazard) triple."""

    gamma: np.ndarray
    beta: np.ndarray
    baseline_cum_hazard: StepFunction
    converged: bool
    n_iterations: int
    observed_loglik_trace: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    parameter_trace: list = field(default_factory=list)


def _uncured_survival_values(baseline_cum_hazard: StepFunction, beta, times, z):
    """S_u(t | z) at each subject, with the zero-tail completion."""
    risk = np.exp(z @ beta)
    vals = np.exp(-baseline_cum_hazard(times) * risk)
    return np.where(times > baseline_cum_hazard.last_jump_time, 0.0, vals)


def e_step(gamma, beta, baseline_cum_hazard: StepFunction, dataset: Dataset,
           clamp_epsilon: float = 1e-10) -> np.ndarray:
    """Posterior uncure probabilities given the observations.

    Events get weight 1; a censored subject gets
    phi * S_u / (1 - phi + phi * S_u), which is exactly 0 in the plateau
    (S_u = 0 past the last observed event time).
    """
    x_design = dataset.design_matrix()
    p_unc = np.clip(sigmoid(x_design @ gamma), clamp_epsilon, 1.0 - clamp_epsilon)
    su = _uncured_survival_values(baseline_cum_hazard, beta, dataset.time, dataset.z)
    posterior = p_unc * su / (1.0 - p_unc + p_unc * su)
    return np.where(dataset.event == 1, 1.0, posterior)


def observed_loglik(gamma, beta, baseline_cum_hazard: StepFunction, dataset: Dataset,
                    clamp_epsilon: float = 1e-10) -> float:
    """Observed-data log likelihood of the mixture with a jump-type density.

    At event times the uncured density is the Breslow jump times the
    relative risk times the survival, all with right-continuous Lambda0.
    """
    x_design = dataset.design_matrix()
    p_unc = np.clip(sigmoid(x_design @ gamma), clamp_epsilon, 1.0 - clamp_epsilon)
    su = _uncured_survival_values(baseline_cum_hazard, beta, dataset.time, dataset.z)
    ev = dataset.event == 1

    jumps = np.diff(baseline_cum_hazard.values, prepend=baseline_cum_hazard.initial_value)
    pos = np.searchsorted(baseline_cum_hazard.jump_times, dataset.time[ev], side="left")
    pos = np.clip(pos, 0, baseline_cum_hazard.jump_times.size - 1)
    d_lam = np.maximum(jumps[pos], clamp_epsilon)

    ll_events = np.sum(
        np.log(p_unc[ev])
        + np.log(d_lam)
        + dataset.z[ev] @ beta
        + np.log(np.maximum(su[ev], clamp_epsilon))
    )
    mix = 1.0 - p_unc[~ev] + p_unc[~ev] * su[~ev]
    ll_censored = np.sum(np.log(np.maximum(mix, clamp_epsilon)))
    return float(ll_events + ll_censored)


def _em_loop(dataset: Dataset, config: EmConfig, gamma_init, update_incidence: bool):
    x_design = dataset.design_matrix()
    engine = CoxEngine(dataset.time, dataset.event, dataset.z)
    event_w = dataset.event.astype(float)

    gamma = np.asarray(gamma_init, dtype=float).copy()
    beta = np.zeros(dataset.q)
    # benchmark-style start: events-only risk sets at beta = 0
    baseline = engine.breslow(beta, event_w, np.zeros(dataset.n))

    trace = []
    param_trace = []
    diagnostics = {"termination": "max_iterations", "failure": None,
                   "logistic_separation": False, "cox_separation": False}
    converged = False
    it = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for it in range(1, config.max_iterations + 1):
            w = e_step(gamma, beta, baseline, dataset, config.clamp_epsilon)

            if update_incidence:
                try:
                    lfit = fit_fractional_logistic(
                        x_design, w, start=gamma, check_rank=(it == 1)
                    )
                except SingularDesignError:
                    diagnostics["failure"] = "singular_design"
                    diagnostics["termination"] = "structural_failure"
                    break
                gamma_new = lfit.gamma
                diagnostics["logistic_separation"] |= lfit.separation
            else:
                gamma_new = gamma

            try:
                cfit = engine.fit(case_weights=w, start=beta)
            except (CoxDivergenceError, InvalidInputError) as exc:
                diagnostics["failure"] = type(exc).__name__
                diagnostics["termination"] = "structural_failure"
                break
            beta_new, baseline = cfit.beta, cfit.baseline_cum_hazard
            diagnostics["cox_separation"] |= cfit.separation

            trace.append(observed_loglik(gamma_new, beta_new, baseline, dataset,
                                         config.clamp_epsilon))
            if config.keep_parameter_trace:
                param_trace.append(
                    {"gamma": gamma_new.copy(), "beta": beta_new.copy(),
                     "baseline_cum_hazard": baseline}
                )

            old = np.concatenate([gamma, beta])
            new = np.concatenate([gamma_new, beta_new])
            rel_change = np.max(np.abs(new - old)) / max(1.0, np.max(np.abs(old)))
            gamma, beta = gamma_new, beta_new
            if rel_change < config.param_tolerance:
                converged = True
                diagnostics["termination"] = "param_tolerance"
                break
            # boundary drift (cure fraction degenerating): report as
            # non-convergent like an exhausted budget would
            if np.max(np.abs(gamma)) > 50.0 or cfit.separation:
                diagnostics["logistic_separation"] |= np.max(np.abs(gamma)) > 50.0
                diagnostics["termination"] = "runaway"
                break

    return MixtureCureFit(
        gamma=gamma,
        beta=beta,
        baseline_cum_hazard=baseline,
        converged=converged,
        n_iterations=it,
        observed_loglik_trace=np.asarray(trace),
        diagnostics=diagnostics,
        parameter_trace=param_trace,
    )


def fit_em(dataset: Dataset, config: EmConfig | None = None) -> MixtureCureFit:
    """EM maximum likelihood estimate of the logistic-Cox mixture cure model.

    Starts from the plain logistic regression of the event indicator for
    gamma and beta = 0. Non-convergence within the budget is returned with
    ``converged = False`` rather than raised.
    """
    config = config or EmConfig()
    if not np.any(dataset.event == 0):
        raise InvalidInputError(
            "mixture cure model needs at least one censored subject"
        )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        init = fit_fractional_logistic(
            dataset.design_matrix(), dataset.event.astype(float)
        )
    return _em_loop(dataset, config, init.gamma, update_incidence=True)


def refit_latency(dataset: Dataset, gamma_fixed, config: EmConfig | None = None) -> MixtureCureFit:
    """EM on the latency component only, keeping gamma fixed."""
    config = config or EmConfig()
    gamma_fixed = np.asarray(gamma_fixed, dtype=float)
    if gamma_fixed.shape != (dataset.p + 1,):
        raise InvalidInputError("gamma_fixed must have length p + 1 (intercept first)")
    fit = _em_loop(dataset, config, gamma_fixed, update_incidence=False)
    fit.gamma = gamma_fixed
    return fit
