import logging
import numpy as np
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import settings

logger = logging.getLogger("mh.parallel")

T = TypeVar("T")


def worker_count(limit: Optional[int] = None) -> int:
    """MH_THREADS caps every pool"""
    return max(1, min(settings.MH_THREADS, limit or settings.MH_THREADS))


def chunked(items: np.ndarray, chunks: int) -> List[np.ndarray]:
    return [c for c in np.array_split(items, max(1, chunks)) if len(c)]


def parallel_map(fn: Callable[..., T], items: Sequence, workers: Optional[int] = None) -> List[T]:
    """Map in a thread pool; results come back in input order so reductions stay deterministic"""
    workers = worker_count(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    logger.debug(f"parallel map over {len(items)} items with {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
