"""Trace estimates and the Monte Carlo cycle-integral kernel."""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from ._parallel import merge_moments, run_shards, seed_sequence, shard_sizes
from .domains import Domain

METHODS = ("mc", "spectral", "closed-form", "quadrature")
_SHARD = 1 << 17


@dataclass(frozen=True)
class CycleTraceEstimate:
    """Estimate of ``c_m = Tr(K^m)``; ``stderr`` is zero for deterministic methods."""

    m: int
    value: float
    stderr: float = 0.0
    method: str = "closed-form"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("trace order m must be >= 2")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    def __float__(self):
        return float(self.value)


def _cycle_shard(task, domain: Domain, alpha: float, m: int):
    size, ss = task
    rng = np.random.default_rng(ss)
    pts = [domain.sample_uniform(size, rng) for _ in range(m)]
    logp = np.zeros(size)
    for j in range(m):
        dist = np.linalg.norm(pts[j] - pts[(j + 1) % m], axis=1)
        logp -= alpha * np.log(dist)
    vals = np.exp(logp)
    mean = vals.mean()
    return size, mean, float(np.sum((vals - mean) ** 2))


def cyclic_product_mc(domain: Domain, alpha: float, m: int, n: int, seed, workers: int = 1) -> CycleTraceEstimate:
    """Plain Monte Carlo for the m-fold cyclic integral of ``|x - y|^{-alpha}`` over D^m."""
    sizes = shard_sizes(n, _SHARD)
    children = seed_sequence(seed).spawn(len(sizes))
    parts = run_shards(partial(_cycle_shard, domain=domain, alpha=alpha, m=m), zip(sizes, children), workers)
    count, mean, m2 = merge_moments(parts)
    scale = domain.measure() ** m
    std = np.sqrt(m2 / (count - 1))
    return CycleTraceEstimate(m=m, value=scale * mean, stderr=scale * std / np.sqrt(count), method="mc")
