"""Internal helpers: deterministic RNG streams, integer roots, worker pools."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

# Domain tags keep Philox streams from different subsystems disjoint even
# when the user passes the same seed everywhere.
DOMAIN_SIMULATE = 1
DOMAIN_MBB = 2
DOMAIN_CONTAMINATE = 3
DOMAIN_EXPERIMENT = 4

_MAX_SEED = 2**64


def stream_rng(seed: int, index: int, domain: int) -> np.random.Generator:
    """Counter-based generator, reproducible and independent per (seed, index)."""
    seed = int(seed)
    index = int(index)
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if index < 0 or index >= 2**48:
        raise ValueError(f"stream index out of range: {index}")
    key = np.array([seed, (domain << 48) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def ceil_cube_root(n: int) -> int:
    """Smallest integer c with c**3 >= n; exact for perfect cubes."""
    if n < 1:
        raise ValueError("n must be positive")
    c = int(round(n ** (1.0 / 3.0)))
    while c**3 < n:
        c += 1
    while c > 1 and (c - 1) ** 3 >= n:
        c -= 1
    return c


def parallel_map(fn, items, workers: int = 1) -> list:
    """Ordered map over items, optionally fanned out to a process pool.

    Results come back in input order regardless of worker count, so any
    deterministic per-item computation stays deterministic overall.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunksize = max(1, len(items) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
