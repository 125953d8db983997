import numpy as np
import pytest

from curemix import Dataset


def random_censored_dataset(rng, n=50, p=2, q=2, censor_scale=2.0):
    """Generic censored sample with continuous times (no ties)."""
    x = rng.standard_normal((n, p))
    z = rng.standard_normal((n, q))
    t = rng.exponential(1.0, n) * np.exp(0.3 * z[:, 0])
    c = rng.exponential(censor_scale, n)
    y = np.minimum(t, c) + 1e-9
    d = (t <= c).astype(int)
    if not d.any():
        d[0] = 1
    return Dataset(y, d, x, z)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
