"""Seed derivation and chunked parallel execution.

Every random stream is a Philox (counter-based) generator keyed by
``SeedSequence([master_seed, *path])``.  Work is cut into chunks whose
boundaries depend only on the problem size and ``chunk_size``, never on the
number of workers, so merged results are worker-count invariant.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

MASK64 = (1 << 64) - 1


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Return the generator for ``(master_seed, *path)``."""
    ss = np.random.SeedSequence([int(master_seed) & MASK64, *(int(k) for k in path)])
    return np.random.Generator(np.random.Philox(ss))


def chunk_bounds(n: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(i, min(i + chunk_size, n)) for i in range(0, n, chunk_size)]


def default_workers() -> int:
    env = os.environ.get("CLESIM_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items, workers: int | None = None) -> list:
    """Order-preserving map; ``fn`` must be a picklable module-level callable."""
    items = list(items)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
