"""Worker-count policy and ordered thread fan-out.

The heavy kernels release the GIL, so per-sample work fans out across a
thread pool. Each item writes its own slot and results are reduced in
index order afterwards, so outputs are identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_ENV_VAR = "QMCLAB_THREADS"

_POOL: ThreadPoolExecutor | None = None
_POOL_SIZE = 0


def worker_count() -> int:
    raw = os.environ.get(_ENV_VAR, "0")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{_ENV_VAR} must be an integer, got {raw!r}")
    if n < 0:
        raise ValueError(f"{_ENV_VAR} must be >= 0")
    if n == 0:
        n = os.cpu_count() or 1
    return n


def _pool(workers: int) -> ThreadPoolExecutor:
    global _POOL, _POOL_SIZE
    if _POOL is None or _POOL_SIZE != workers:
        if _POOL is not None:
            _POOL.shutdown(wait=False)
        _POOL = ThreadPoolExecutor(max_workers=workers)
        _POOL_SIZE = workers
    return _POOL


def map_ordered(fn, items, workers: int | None = None) -> list:
    """Like map(fn, items) but fanned out over threads, order preserved."""
    items = list(items)
    if workers is None:
        workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (workers * 4))
    return list(_pool(workers).map(fn, items, chunksize=chunk))
