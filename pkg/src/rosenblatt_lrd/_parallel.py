"""Deterministic sharding of stochastic work.

Work is split into shards of a fixed size that depends only on the problem
size, never on the worker count; each shard gets a child of the root
``SeedSequence``. Results are combined in shard order, so running with one
worker or many produces bit-identical output.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    if isinstance(seed, (list, tuple)):
        return np.random.SeedSequence([int(s) for s in seed])
    return np.random.SeedSequence(int(seed))


def shard_sizes(n: int, shard: int) -> list[int]:
    full, rem = divmod(int(n), int(shard))
    return [shard] * full + ([rem] if rem else [])


def run_shards(func, tasks, workers: int = 1) -> list:
    """Apply ``func`` to each task, in order, on up to ``workers`` processes."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks))


def merge_moments(parts) -> tuple[int, float, float]:
    """Chan et al. pairwise merge of (count, mean, M2) triples, left to right."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2
