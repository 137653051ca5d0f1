"""Counter-based random streams and an order-preserving worker pool.

Every Monte Carlo block draws from ``stream(seed, *keys)``, so results depend
only on the keys of a block and never on which worker ran it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

BLOCK_SIZE = 4096


def stream(seed, *keys):
    """Independent Philox generator addressed by (seed, keys)."""
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


def blocks(trials, block_size=BLOCK_SIZE):
    """(index, size) pairs partitioning ``trials`` into fixed blocks."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    return [(b, min(block_size, trials - b * block_size)) for b in range(-(-trials // block_size))]


def ordered_map(func, tasks, workers=1):
    """``[func(t) for t in tasks]``, optionally spread over processes."""
    tasks = list(tasks)
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
