"""Product-limit estimation: Kaplan-Meier, the conditional (Beran) variant
on a one-dimensional index, and least-squares cross-validation for its
bandwidth."""

from __future__ import annotations

import numpy as np

from .data import Dataset, StepFunction
from .errors import BandwidthSelectionError, DegenerateNeighborhoodError, InvalidInputError
from .kernels import EPANECHNIKOV, Kernel


def kaplan_meier(dataset: Dataset) -> StepFunction:
    """Product-limit survival estimator.

    Jumps only at observed event times; tied event times are aggregated
    into a single multiplicative factor. Censored subjects tied with an
    event time remain at risk for that event.
    """
    times = dataset.time
    events = dataset.event.astype(bool)
    order = np.argsort(times, kind="stable")
    t_sorted = times[order]

    event_times, d_k = np.unique(t_sorted[events[order]], return_counts=True)
    # at risk: subjects with Y >= t_k
    n_k = times.size - np.searchsorted(t_sorted, event_times, side="left")
    surv = np.cumprod(1.0 - d_k / n_k)
    return StepFunction(event_times, surv, initial_value=1.0)


def _normalized_weights(index_values, u, bandwidth, kernel):
    """Nadaraya-Watson weights of each subject at evaluation point ``u``."""
    raw = kernel.evaluate((np.asarray(index_values, dtype=float) - u) / bandwidth)
    total = raw.sum()
    if total <= 0.0:
        raise DegenerateNeighborhoodError(
            f"no kernel mass at u={u!r} with bandwidth={bandwidth!r}"
        )
    return raw / total


def _weighted_product_limit(weights, times, events):
    """Beran product over distinct event times for one weight vector."""
    order = np.argsort(times, kind="stable")
    t_sorted = times[order]
    w_sorted = weights[order]
    ev_sorted = events[order].astype(bool)

    event_times = np.unique(t_sorted[ev_sorted])
    if event_times.size == 0:
        return event_times, np.array([])

    # numerator: kernel mass of events at each distinct event time
    ev_t = t_sorted[ev_sorted]
    ev_w = w_sorted[ev_sorted]
    starts = np.searchsorted(ev_t, event_times, side="left")
    num = np.add.reduceat(ev_w, starts)

    # denominator: kernel mass still at risk (Y >= t_k)
    suffix = np.concatenate([np.cumsum(w_sorted[::-1])[::-1], [0.0]])
    den = suffix[np.searchsorted(t_sorted, event_times, side="left")]

    factors = np.ones_like(num)
    ok = den > 0.0
    factors[ok] = 1.0 - num[ok] / den[ok]
    surv = np.clip(np.cumprod(np.clip(factors, 0.0, 1.0)), 0.0, 1.0)
    return event_times, surv


def beran_survival(
    index_values,
    times,
    events,
    u: float,
    bandwidth: float,
    kernel: Kernel = EPANECHNIKOV,
) -> StepFunction:
    """Conditional product-limit (Beran) estimator of S(t | index = u).

    Uses Nadaraya-Watson weights on the index and a product over observed
    event times only. Raises DegenerateNeighborhoodError when every kernel
    weight vanishes at ``u``.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events)
    index_values = np.asarray(index_values, dtype=float)
    if not (index_values.shape == times.shape == events.shape):
        raise InvalidInputError("index_values, times and events must share a length")
    if bandwidth <= 0:
        raise InvalidInputError("bandwidth must be positive")

    weights = _normalized_weights(index_values, u, bandwidth, kernel)
    event_times, surv = _weighted_product_limit(weights, times, events)
    return StepFunction(event_times, surv, initial_value=1.0)


def nonparametric_cure_prob(
    index_values,
    times,
    events,
    u: float,
    bandwidth: float,
    kernel: Kernel = EPANECHNIKOV,
) -> float:
    """Beran survival at the largest observed event time, clamped to [0, 1].

    This is the nonparametric estimate of the probability of never
    experiencing the event given index = u.
    """
    fn = beran_survival(index_values, times, events, u, bandwidth, kernel)
    return float(np.clip(fn.final_value, 0.0, 1.0))


def conditional_cure_probs(
    index_values,
    times,
    events,
    eval_points,
    bandwidth: float,
    kernel: Kernel = EPANECHNIKOV,
):
    """Vectorized ``nonparametric_cure_prob`` over many evaluation points.

    Returns ``(probs, degenerate)`` where ``degenerate`` marks evaluation
    points with no kernel mass (their prob entry is NaN).
    """
    index_values = np.asarray(index_values, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events).astype(bool)
    eval_points = np.asarray(eval_points, dtype=float)

    order = np.argsort(times, kind="stable")
    t_sorted = times[order]
    ev_sorted = events[order]
    idx_sorted = index_values[order]

    event_times = np.unique(t_sorted[ev_sorted])
    raw = kernel.evaluate((idx_sorted[None, :] - eval_points[:, None]) / bandwidth)
    totals = raw.sum(axis=1)
    degenerate = totals <= 0.0
    totals = np.where(degenerate, 1.0, totals)
    w = raw / totals[:, None]

    # risk-set mass (suffix sums) and event mass per distinct event time
    suffix = np.concatenate(
        [np.cumsum(w[:, ::-1], axis=1)[:, ::-1], np.zeros((w.shape[0], 1))], axis=1
    )
    den = suffix[:, np.searchsorted(t_sorted, event_times, side="left")]
    ev_cols = np.flatnonzero(ev_sorted)
    starts = np.searchsorted(t_sorted[ev_cols], event_times, side="left")
    num = np.add.reduceat(w[:, ev_cols], starts, axis=1)

    factors = np.where(den > 0.0, 1.0 - num / np.where(den > 0.0, den, 1.0), 1.0)
    probs = np.clip(np.prod(np.clip(factors, 0.0, 1.0), axis=1), 0.0, 1.0)
    probs[degenerate] = np.nan
    return probs, degenerate


def default_bandwidth_grid(index_values, n_points: int = 30) -> np.ndarray:
    """Log-spaced candidate bandwidths from 0.05*sd*n^(-1/5) up to the range."""
    index_values = np.asarray(index_values, dtype=float)
    n = index_values.size
    sd = float(np.std(index_values))
    span = float(index_values.max() - index_values.min())
    if sd <= 0.0 or span <= 0.0:
        return np.array([1.0])
    lo = 0.05 * sd * n ** (-0.2)
    return np.geomspace(lo, span, n_points)


def cv_bandwidth(
    index_values,
    times,
    events,
    grid=None,
    kernel: Kernel = EPANECHNIKOV,
) -> float:
    """Least-squares cross-validated bandwidth for the conditional CDF of Y.

    Minimizes the leave-one-out criterion
    ``sum_i sum_{t in E} (1{Y_i <= t} - H^(-i)(t | index_i; b))^2``
    over the grid, where E is the set of distinct observed event times and
    H^(-i) is the kernel-weighted empirical conditional CDF omitting
    subject i. Grid values for which some subject has an empty leave-one-out
    neighborhood are discarded; ties are broken toward the smaller
    bandwidth.
    """
    index_values = np.asarray(index_values, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events).astype(bool)
    if grid is None:
        grid = default_bandwidth_grid(index_values)
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0 or np.any(grid <= 0):
        raise InvalidInputError("bandwidth grid must be non-empty and positive")

    event_times = np.unique(times[events])
    below = times[:, None] <= event_times[None, :]  # 1{Y_j <= t_k}
    target = below.astype(float)

    diffs = index_values[None, :] - index_values[:, None]
    scores = np.full(grid.size, np.inf)
    for g, b in enumerate(grid):
        k = kernel.evaluate(diffs / b)
        np.fill_diagonal(k, 0.0)
        row_mass = k.sum(axis=1)
        if np.any(row_mass <= 0.0):
            continue
        h_loo = (k @ target) / row_mass[:, None]
        scores[g] = float(((target - h_loo) ** 2).sum())

    if not np.any(np.isfinite(scores)):
        raise BandwidthSelectionError(
            "every candidate bandwidth leaves some subject without neighbors"
        )
    return float(grid[int(np.argmin(scores))])
