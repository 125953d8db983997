"""Censored-data containers: subjects, datasets and step functions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class Subject:
    """One censored observation.

    ``time`` is the follow-up time (event or censoring, whichever came
    first), ``event`` is 1 if the event was observed and 0 if censored.
    ``x`` holds the incidence covariates and ``z`` the latency covariates;
    neither stores an intercept column.
    """

    time: float
    event: int
    x: np.ndarray
    z: np.ndarray


class Dataset:
    """An i.i.d. sample of censored observations stored column-wise.

    Internally keeps numpy arrays (``time``, ``event``, ``x``, ``z``) so the
    estimators can work vectorized; ``subjects`` materializes row views on
    demand.
    """

    def __init__(self, time, event, x, z):
        time = np.asarray(time, dtype=float)
        event = np.asarray(event)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if x.shape[0] != time.shape[0] and x.shape[1] == time.shape[0]:
            x = x.T
        if z.shape[0] != time.shape[0] and z.shape[1] == time.shape[0]:
            z = z.T

        if time.ndim != 1 or time.size == 0:
            raise InvalidInputError("dataset must contain at least one subject")
        if not np.all(np.isfinite(time)) or np.any(time <= 0):
            raise InvalidInputError("follow-up times must be positive and finite")
        if event.shape != time.shape or not np.all(np.isin(event, (0, 1))):
            raise InvalidInputError("event indicators must be 0 or 1, one per subject")
        if x.shape[0] != time.size or z.shape[0] != time.size:
            raise InvalidInputError("covariate row counts must match the number of subjects")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            raise InvalidInputError("covariates must be finite")
        if not np.any(event == 1):
            raise InvalidInputError("dataset must contain at least one observed event")

        self.time = time
        self.event = event.astype(np.int8)
        self.x = x
        self.z = z

    @property
    def n(self) -> int:
        return self.time.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.z.shape[1]

    @property
    def subjects(self) -> list[Subject]:
        return [
            Subject(float(self.time[i]), int(self.event[i]), self.x[i], self.z[i])
            for i in range(self.n)
        ]

    @classmethod
    def from_subjects(cls, subjects) -> "Dataset":
        if not subjects:
            raise InvalidInputError("dataset must contain at least one subject")
        time = [s.time for s in subjects]
        event = [s.event for s in subjects]
        x = np.vstack([np.atleast_1d(s.x) for s in subjects])
        z = np.vstack([np.atleast_1d(s.z) for s in subjects])
        return cls(time, event, x, z)

    def design_matrix(self) -> np.ndarray:
        """Incidence design matrix with a leading intercept column."""
        return np.column_stack([np.ones(self.n), self.x])

    def subset(self, idx) -> "Dataset":
        """New dataset holding the rows in ``idx`` (bootstrap / splits)."""
        return Dataset(self.time[idx], self.event[idx], self.x[idx], self.z[idx])

    def with_latency_covariates(self, z) -> "Dataset":
        """Same observations with a replacement latency covariate matrix."""
        return Dataset(self.time, self.event, self.x, z)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        n_ev = int(self.event.sum())
        return f"Dataset(n={self.n}, p={self.p}, q={self.q}, events={n_ev})"


@dataclass
class StepFunction:
    """Right-continuous piecewise-constant function.

    Takes the value ``initial_value`` on [0, jump_times[0]) and
    ``values[k]`` on [jump_times[k], jump_times[k+1]).
    """

    jump_times: np.ndarray
    values: np.ndarray
    initial_value: float = 1.0

    def __post_init__(self):
        self.jump_times = np.asarray(self.jump_times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.jump_times.shape != self.values.shape:
            raise InvalidInputError("jump_times and values must have equal length")
        if self.jump_times.size and np.any(np.diff(self.jump_times) <= 0):
            raise InvalidInputError("jump_times must be strictly increasing")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.jump_times, t, side="right") - 1
        padded = np.concatenate([[self.initial_value], self.values])
        out = padded[idx + 1]
        return out if out.ndim else float(out)

    @property
    def final_value(self) -> float:
        return float(self.values[-1]) if self.values.size else self.initial_value

    @property
    def last_jump_time(self) -> float:
        if self.jump_times.size == 0:
            raise InvalidInputError("step function has no jumps")
        return float(self.jump_times[-1])
