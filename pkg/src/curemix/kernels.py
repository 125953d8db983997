"""Compactly supported smoothing kernels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def epanechnikov(u):
    """Epanechnikov kernel (3/4)(1 - u^2) on [-1, 1], zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Kernel:
    """Symmetric probability density with compact support.

    ``evaluate`` must vanish outside [-support_radius, support_radius] and
    integrate to one over its support.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    support_radius: float


EPANECHNIKOV = Kernel(evaluate=epanechnikov, support_radius=1.0)


def silverman_bandwidth(values: np.ndarray, kernel: Kernel = EPANECHNIKOV) -> float:
    """Rule-of-thumb density bandwidth for a one-dimensional sample.

    Uses the Epanechnikov constant 2.345 with the robust scale
    min(sd, IQR/1.349); other kernels reuse the same constant, which is
    adequate for trimming purposes.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    sd = float(np.std(values))
    q75, q25 = np.percentile(values, [75, 25])
    iqr = float(q75 - q25)
    scale = min(sd, iqr / 1.349) if iqr > 0 else sd
    if scale <= 0:
        scale = max(abs(float(values[0])), 1.0)
    return 2.345 * scale * n ** (-0.2)
