"""
Deterministic per-worker random substreams.

A run of n samples with seed s is split into ``workers`` contiguous shares. Share
k draws from the k-th child of ``SeedSequence(s)``, so a result depends only on
(seed, workers) and never on thread scheduling.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from uframe.config import UFRAME_THREADS
from uframe.errors import ConfigurationError

logger = logging.getLogger(__name__)

T = TypeVar("T")


def worker_count(requested: int | None = None) -> int:
    """
    Threads to use: the request, capped by UFRAME_THREADS.
    """
    if UFRAME_THREADS < 1:
        raise ConfigurationError(f"UFRAME_THREADS must be at least 1, got {UFRAME_THREADS}")
    if requested is None:
        return UFRAME_THREADS
    if requested < 1:
        raise ConfigurationError(f"thread count must be at least 1, got {requested}")
    return min(requested, UFRAME_THREADS)


def substreams(seed: int, workers: int) -> list[np.random.Generator]:
    """
    Independent generators spawned from SeedSequence(seed).
    """
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(workers)]


def split_budget(n: int, workers: int) -> list[int]:
    """
    Shares of n summing to n, the first n % workers one larger.
    """
    base, extra = divmod(n, workers)
    return [base + (1 if k < extra else 0) for k in range(workers)]


def run_streams(
    task: Callable[[int, np.random.Generator], T],
    n: int,
    seed: int,
    workers: int = 1,
) -> list[T]:
    """
    Call task(share, rng) once per substream and return the results in stream order.
    """
    workers = max(1, min(workers, n))
    shares = split_budget(n, workers)
    rngs = substreams(seed, workers)
    if workers == 1:
        return [task(shares[0], rngs[0])]
    logger.debug("running %d samples on %d substreams", n, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(task, share, rng) for share, rng in zip(shares, rngs)]
        return [f.result() for f in futures]
