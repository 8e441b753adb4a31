"""Batch fan-out for point-wise numpy work."""

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor

import numpy as np

DEFAULT_BATCH = 16384


def map_batches(
    fn: Callable[[np.ndarray], np.ndarray],
    points: np.ndarray,
    threads: int = 1,
    batch: int = DEFAULT_BATCH,
) -> np.ndarray:
    """Apply ``fn`` to row batches of ``points`` and concatenate the results.

    ``fn`` must be pure; results are reassembled in input order, so the output does not
    depend on the thread count.
    """
    n = len(points)
    if n == 0:
        return fn(points)
    chunks = [points[i : i + batch] for i in range(0, n, batch)]
    if threads <= 1 or len(chunks) == 1:
        return np.concatenate([fn(chunk) for chunk in chunks], axis=0)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return np.concatenate(list(pool.map(fn, chunks)), axis=0)
