"""Cox proportional hazards machinery.

Weighted/offset Breslow partial likelihood solved by Newton's method with
step-halving, the weighted Breslow baseline cumulative hazard, and
uncured-survival evaluation with the zero-tail completion (survival is set
to zero strictly beyond the last observed event time, which identifies the
cure fraction in the censoring plateau).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset, StepFunction
from .errors import CoxDivergenceError, InvalidInputError


@dataclass
class CoxFit:
    beta: np.ndarray
    baseline_cum_hazard: StepFunction
    n_iterations: int
    converged: bool
    final_gradient_norm: float
    partial_loglik: float
    separation: bool = False


class CoxEngine:
    """Sorted risk-set structures for one (times, events, z) sample.

    Built once and reused across repeated weighted fits (the EM latency
    M-step refits the same sample every iteration).
    """

    def __init__(self, times, events, z):
        times = np.asarray(times, dtype=float)
        events = np.asarray(events).astype(bool)
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[0] != times.size:
            z = z.T
        order = np.argsort(times, kind="stable")
        self.t = times[order]
        self.d = events[order]
        self.z = z[order]
        self.order = order
        self.n, self.q = self.z.shape

        self.event_rows = np.flatnonzero(self.d)
        self.event_times = np.unique(self.t[self.d])
        # reduceat group starts within the event rows (sorted by time)
        self.group_starts = np.searchsorted(
            self.t[self.event_rows], self.event_times, side="left"
        )
        self.risk_starts = np.searchsorted(self.t, self.event_times, side="left")

    def _risk_terms(self, beta, w, o):
        """Event mass, at-risk sums and the stabilizing shift at each event time."""
        eta = self.z @ beta + o
        active = w > 0.0
        if not np.any(active & self.d):
            raise InvalidInputError("no event carries positive weight")
        m = float(eta[active].max())
        r = np.zeros(self.n)
        r[active] = w[active] * np.exp(eta[active] - m)

        dw = np.add.reduceat(w[self.event_rows], self.group_starts)
        suffix0 = np.concatenate([np.cumsum(r[::-1])[::-1], [0.0]])
        s0 = suffix0[self.risk_starts]

        rz = r[:, None] * self.z
        suffix1 = np.concatenate(
            [np.cumsum(rz[::-1], axis=0)[::-1], np.zeros((1, self.q))], axis=0
        )
        s1 = suffix1[self.risk_starts]
        return eta, m, r, dw, s0, s1

    def loglik(self, beta, w, o):
        eta, m, _, dw, s0, _ = self._risk_terms(beta, w, o)
        pos = dw > 0.0
        ev = self.event_rows
        return float(
            np.sum(w[ev] * eta[ev]) - np.sum(dw[pos] * (m + np.log(s0[pos])))
        )

    def loglik_grad(self, beta, w, o):
        ll, grad, _ = self._eval(beta, w, o)
        return ll, grad

    def _eval(self, beta, w, o, want_hessian=False):
        """Log likelihood, gradient and (optionally) Hessian in one pass."""
        eta, m, r, dw, s0, s1 = self._risk_terms(beta, w, o)
        pos = dw > 0.0
        ev = self.event_rows
        ll = float(np.sum(w[ev] * eta[ev]) - np.sum(dw[pos] * (m + np.log(s0[pos]))))
        s0p = s0[pos]
        zbar = s1[pos] / s0p[:, None]
        grad = (w[ev, None] * self.z[ev]).sum(axis=0) - (dw[pos, None] * zbar).sum(axis=0)
        if not want_hessian:
            return ll, grad, None
        rzz = np.einsum("i,ij,ik->ijk", r, self.z, self.z)
        suffix2 = np.concatenate(
            [np.cumsum(rzz[::-1], axis=0)[::-1], np.zeros((1, self.q, self.q))],
            axis=0,
        )
        s2 = suffix2[self.risk_starts][pos]
        outer = np.einsum("kj,kl->kjl", zbar, zbar)
        hess = -np.einsum("k,kjl->jl", dw[pos], s2 / s0p[:, None, None] - outer)
        return ll, grad, hess

    def _hessian(self, beta, w, o):
        return self._eval(beta, w, o, want_hessian=True)[2]

    def breslow(self, beta, w, o) -> StepFunction:
        """Weighted Breslow baseline cumulative hazard at ``beta``."""
        eta, m, r, dw, s0, _ = self._risk_terms(beta, w, o)
        pos = dw > 0.0
        log_jumps = np.log(dw[pos]) - m - np.log(s0[pos])
        return StepFunction(
            self.event_times[pos], np.cumsum(np.exp(log_jumps)), initial_value=0.0
        )

    def fit(
        self,
        case_weights=None,
        offsets=None,
        start=None,
        gradient_tol: float = 1e-8,
        max_iterations: int = 100,
    ) -> CoxFit:
        w = np.ones(self.n) if case_weights is None else np.asarray(case_weights, float)[self.order]
        o = np.zeros(self.n) if offsets is None else np.asarray(offsets, float)[self.order]

        beta = np.zeros(self.q) if start is None else np.asarray(start, dtype=float).copy()
        ll, grad, hess = self._eval(beta, w, o, want_hessian=True)
        if not np.isfinite(ll):
            raise CoxDivergenceError("partial likelihood not finite at the start point")
        converged = False
        separation = False
        it = 0
        for it in range(1, max_iterations + 1):
            gnorm = float(np.max(np.abs(grad)))
            if gnorm < gradient_tol:
                converged = True
                break
            try:
                step = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(-hess, grad, rcond=None)[0]

            new_beta = beta + step
            new_ll, new_grad, new_hess = self._eval(new_beta, w, o, want_hessian=True)
            halvings = 0
            while (not np.isfinite(new_ll) or new_ll < ll) and halvings < 30:
                step *= 0.5
                new_beta = beta + step
                new_ll, new_grad, new_hess = self._eval(new_beta, w, o, want_hessian=True)
                halvings += 1
            if not np.isfinite(new_ll):
                raise CoxDivergenceError(
                    "partial likelihood overflowed and step-halving did not recover"
                )
            if new_ll <= ll:
                # numerical optimum: no ascent direction measurably improves
                break
            beta, ll, grad, hess = new_beta, new_ll, new_grad, new_hess

            if np.max(np.abs(beta)) > 50.0:
                separation = True
                warnings.warn(
                    "monotone partial likelihood suspected: |beta| drifted beyond 50",
                    RuntimeWarning,
                    stacklevel=2,
                )
                break

        return CoxFit(
            beta=beta,
            baseline_cum_hazard=self.breslow(beta, w, o),
            n_iterations=it,
            converged=converged and not separation,
            final_gradient_norm=float(np.max(np.abs(grad))),
            partial_loglik=ll,
            separation=separation,
        )


def fit_cox(dataset: Dataset, case_weights=None, offsets=None, start=None) -> CoxFit:
    """Fit a Cox model by weighted Breslow partial likelihood.

    ``case_weights`` multiply each subject's contribution (events and
    risk-set presence alike); ``offsets`` are added to the linear
    predictor. Requires at least one event with positive weight.
    """
    _check_vector(case_weights, dataset.n, "case_weights")
    _check_vector(offsets, dataset.n, "offsets")
    if case_weights is not None:
        cw = np.asarray(case_weights, dtype=float)
        if not np.any((dataset.event == 1) & (cw > 0)):
            raise InvalidInputError("need at least one event with positive weight")
    engine = CoxEngine(dataset.time, dataset.event, dataset.z)
    return engine.fit(case_weights, offsets, start=start)


def partial_loglik(dataset: Dataset, beta, case_weights=None, offsets=None) -> float:
    """Weighted Breslow partial log likelihood at ``beta``."""
    engine = CoxEngine(dataset.time, dataset.event, dataset.z)
    w = np.ones(dataset.n) if case_weights is None else np.asarray(case_weights, float)
    o = np.zeros(dataset.n) if offsets is None else np.asarray(offsets, float)
    return engine.loglik(np.asarray(beta, dtype=float), w[engine.order], o[engine.order])


def partial_loglik_gradient(dataset: Dataset, beta, case_weights=None, offsets=None):
    """Analytic gradient of the partial log likelihood at ``beta``."""
    engine = CoxEngine(dataset.time, dataset.event, dataset.z)
    w = np.ones(dataset.n) if case_weights is None else np.asarray(case_weights, float)
    o = np.zeros(dataset.n) if offsets is None else np.asarray(offsets, float)
    return engine.loglik_grad(np.asarray(beta, dtype=float), w[engine.order], o[engine.order])[1]


def uncured_survival(fit: CoxFit, t, z) -> float:
    """Survival of an uncured subject: exp(-Lambda0(t) exp(beta'z)).

    Returns 0 strictly beyond the last observed event time (zero-tail
    completion); without it the cure/latency split is unidentified in the
    plateau.
    """
    lam = fit.baseline_cum_hazard
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InvalidInputError("t must be non-negative")
    risk = np.exp(np.asarray(z, dtype=float) @ fit.beta)
    out = np.exp(-lam(t_arr) * risk)
    out = np.where(t_arr > lam.last_jump_time, 0.0, out)
    return out if out.ndim else float(out)


def _check_vector(vec, n, name):
    if vec is not None and np.asarray(vec).shape != (n,):
        raise InvalidInputError(f"{name} must have one entry per subject")
