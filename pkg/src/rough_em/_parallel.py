"""Chunked execution over path indices with order-preserving aggregation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "ROUGH_EM_THREADS"

# doubles per dense (paths x grid x width) array in one chunk
_BUDGET = 1 << 24
_CAP = 256


def chunk_size(grid_points: int, width: int = 1) -> int:
    """Paths per chunk; depends only on the problem shape, never on the thread count."""
    return max(1, min(_CAP, _BUDGET // max(1, grid_points * width)))


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("thread count must be at least 1")
    return threads


def run_chunks(fn, n_items: int, chunk: int, threads: int = 1) -> list:
    """Call ``fn(start, stop)`` for consecutive ranges and return results in range order."""
    bounds = [(a, min(a + chunk, n_items)) for a in range(0, n_items, chunk)]
    if threads <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
