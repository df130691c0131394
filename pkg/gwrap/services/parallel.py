"""Worker pool and seeded random streams.

The pool size is read from the environment once at import, capped by
GWRAP_THREADS. Work is split into chunks and results are reassembled in
chunk order, so outputs never depend on the number of workers.
"""
import os
import zlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

GWRAP_THREADS = int(os.environ.get("GWRAP_THREADS", os.cpu_count() or 1))

T = TypeVar("T")
R = TypeVar("R")


def chunk_slices(total: int, chunk_size: int) -> List[slice]:
    """Split range(total) into consecutive slices of at most chunk_size."""
    chunk_size = max(1, int(chunk_size))
    return [slice(start, min(start + chunk_size, total)) for start in range(0, total, chunk_size)]


def parallel_map(func: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """Apply func to every item on the shared pool, preserving order.

    Args:
        func: Pure function of one item
        items: Work items

    Returns:
        Results in the same order as items
    """
    items = list(items)
    if len(items) <= 1 or GWRAP_THREADS <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(GWRAP_THREADS, len(items))) as executor:
        return list(executor.map(func, items))


def _stream_key(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    return zlib.crc32(str(key).encode("utf-8"))


def rng_for(seed: int, *stream: object) -> np.random.Generator:
    """Independent generator for a named stream derived from one seed.

    The stream keys play the role of a counter: the same (seed, keys) always
    yields the same sequence, and different keys never share one.
    """
    spawn_key = tuple(_stream_key(key) for key in stream)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=spawn_key))
