"""Process-based map for independent replications.

Workers receive explicit (seed, index) pairs so results do not depend on
scheduling order.
"""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, items, n_jobs=None):
    """Map ``fn`` over ``items``, preserving order.

    ``n_jobs=None`` uses all CPUs; ``n_jobs<=1`` stays in-process. ``fn``
    and the items must be picklable when running with processes.
    """
    items = list(items)
    if n_jobs is None:
        n_jobs = os.cpu_count() or 1
    n_jobs = max(1, min(int(n_jobs), len(items) or 1))
    if n_jobs == 1:
        return [fn(item) for item in items]
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:
        ctx = multiprocessing.get_context()
    chunksize = max(1, len(items) // (n_jobs * 8))
    with ProcessPoolExecutor(max_workers=n_jobs, mp_context=ctx) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
