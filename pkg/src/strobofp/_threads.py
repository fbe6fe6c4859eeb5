"""Worker-pool helper; STROBOFP_THREADS caps sweep parallelism."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count(n_items: int) -> int:
    env = os.environ.get("STROBOFP_THREADS")
    if env:
        cap = max(1, int(env))
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_items))


def parallel_map(fn, items):
    """Order-preserving map over independent work items."""
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
