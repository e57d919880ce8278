"""Ordered fan-out of independent work items."""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def map_ordered(fn: Callable[[T], R], items: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """Apply fn to every item; results come back in input order.

    fn must be picklable (a module-level function or functools.partial of one)
    when workers > 1.
    """
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(workers, len(items))
    logger.debug("dispatching %d items to %d workers", len(items), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def split_grid(energies: np.ndarray, chunks: int) -> List[np.ndarray]:
    """Contiguous chunks of an energy grid, in order."""
    chunks = max(1, min(chunks, len(energies)))
    return [c for c in np.array_split(np.asarray(energies, dtype=float), chunks) if len(c)]
