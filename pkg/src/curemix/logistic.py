"""Fractional-response logistic maximum likelihood.

Serves both the incidence M-step of the EM algorithm (responses are
posterior uncure weights) and the projection step of the 2-step estimator
(responses are nonparametric uncure probabilities).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularDesignError
from .kernels import EPANECHNIKOV, Kernel

_PROB_EPS = 1e-10


def sigmoid(u):
    """Numerically stable logistic function e^u / (1 + e^u)."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out if out.ndim else float(out)


# the specification names this map phi; keep the conventional alias
phi = sigmoid


@dataclass
class LogisticFit:
    gamma: np.ndarray
    converged: bool
    n_iterations: int
    neg_hessian: np.ndarray
    separation: bool = False


def _bernoulli_loglik(responses, probs, trim_weights):
    p = np.clip(probs, _PROB_EPS, 1.0 - _PROB_EPS)
    return float(
        np.sum(trim_weights * (responses * np.log(p) + (1.0 - responses) * np.log(1.0 - p)))
    )


def fit_fractional_logistic(
    design: np.ndarray,
    responses: np.ndarray,
    trim_weights=None,
    start=None,
    gradient_tol: float = 1e-10,
    max_iterations: int = 200,
    check_rank: bool = True,
) -> LogisticFit:
    """Maximize the Bernoulli-type log likelihood with responses in [0, 1].

    ``design`` must already contain the intercept column. Newton-Raphson
    with step-halving from ``start`` (zeros by default); the objective is
    concave for any responses in [0, 1], so the maximizer is unique when
    the trimmed design has full column rank.
    """
    design = np.asarray(design, dtype=float)
    responses = np.asarray(responses, dtype=float)
    if np.any(responses < 0) or np.any(responses > 1):
        raise ValueError("responses must lie in [0, 1]")
    n, k = design.shape
    if trim_weights is None:
        trim_weights = np.ones(n)
    trim_weights = np.asarray(trim_weights, dtype=float)

    if check_rank:
        kept = trim_weights > 0
        if np.linalg.matrix_rank(design[kept]) < k:
            raise SingularDesignError(
                "design matrix is rank deficient on the trimmed subsample"
            )

    binary = np.all((responses == 0.0) | (responses == 1.0))
    gamma = np.zeros(k) if start is None else np.asarray(start, dtype=float).copy()
    loglik = _bernoulli_loglik(responses, sigmoid(design @ gamma), trim_weights)
    grad = design.T @ (trim_weights * (responses - sigmoid(design @ gamma)))
    converged = False
    separation = False
    it = 0
    for it in range(1, max_iterations + 1):
        gnorm = np.max(np.abs(grad))
        if gnorm < gradient_tol:
            converged = True
            break
        probs = sigmoid(design @ gamma)
        w = trim_weights * probs * (1.0 - probs)
        hess = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]

        # accept a candidate that measurably increases the objective, or a
        # near-optimum polish step that shrinks the gradient (the objective
        # cannot resolve improvements finer than its own rounding noise)
        accepted = False
        for _ in range(31):
            new_gamma = gamma + step
            new_loglik = _bernoulli_loglik(
                responses, sigmoid(design @ new_gamma), trim_weights
            )
            new_grad = design.T @ (
                trim_weights * (responses - sigmoid(design @ new_gamma))
            )
            slack = 1e-12 * (1.0 + abs(loglik))
            if np.isfinite(new_loglik) and (
                new_loglik > loglik
                or (np.max(np.abs(new_grad)) < gnorm and new_loglik >= loglik - slack)
            ):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        gamma, loglik, grad = new_gamma, new_loglik, new_grad

        if binary and np.max(np.abs(gamma)) > 50.0:
            separation = True
            warnings.warn(
                "complete separation suspected: coefficients drifting beyond 50",
                RuntimeWarning,
                stacklevel=2,
            )
            break

    probs = sigmoid(design @ gamma)
    w = trim_weights * probs * (1.0 - probs)
    neg_hessian = design.T @ (design * w[:, None])
    return LogisticFit(
        gamma=gamma,
        converged=converged,
        n_iterations=it,
        neg_hessian=neg_hessian,
        separation=separation,
    )


def trim_by_index_density(
    index_values,
    bandwidth: float,
    kernel: Kernel = EPANECHNIKOV,
    threshold: float = 0.0,
):
    """Indicator trim weights 1{density of the index >= threshold}.

    The density is the kernel estimate evaluated at each subject's own
    index value. ``threshold = 0`` keeps every subject (no trimming).
    """
    index_values = np.asarray(index_values, dtype=float)
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    n = index_values.size
    diffs = (index_values[None, :] - index_values[:, None]) / bandwidth
    density = kernel.evaluate(diffs).sum(axis=1) / (n * bandwidth)
    return (density >= threshold).astype(float)
