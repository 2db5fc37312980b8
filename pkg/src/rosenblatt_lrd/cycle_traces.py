"""Cycle traces ``c_m = Tr(K^m)`` of the Riesz operator.

Two independent routes are provided: Monte Carlo over the m-fold cyclic
integral, and power sums of a computed spectrum completed by the Weyl law.
"""

from __future__ import annotations

import csv

import numpy as np
from scipy import special

from .domains import Domain
from .errors import ParameterRangeError
from .estimates import CycleTraceEstimate, cyclic_product_mc
from .riesz_spectrum import Spectrum, weyl_prefactor

__all__ = [
    "CycleTraceEstimate",
    "cycle_trace_mc",
    "cycle_trace_spectral",
    "weyl_tail_power_sum",
    "write_traces_csv",
]


def cycle_trace_mc(domain: Domain, alpha: float, m: int, n: int = 10**6, seed=0, workers: int = 1) -> CycleTraceEstimate:
    """Monte Carlo estimate of the m-fold cyclic integral of ``|x - y|^{-alpha}``.

    The estimate is ``|D|^m`` times the sample mean of the cyclic product at
    ``n`` independent m-tuples of uniform points. Shards are seeded from
    ``seed`` independently of ``workers``.
    """
    d = domain.dim
    if not 0 < alpha < d / 2:
        raise ParameterRangeError(f"alpha must lie in (0, {d / 2})")
    if m < 2:
        raise ValueError("m must be >= 2")
    if n < 10**4:
        raise ValueError("n must be >= 1e4")
    return cyclic_product_mc(domain, alpha, m, n, seed, workers)


def weyl_tail_power_sum(prefactor: float, p: float, m: int, start: int) -> float:
    """``sum_{k > start} (prefactor * k^{-p})^m`` via the Hurwitz zeta function."""
    s = m * p
    if s <= 1:
        raise ParameterRangeError(f"tail series diverges: m (d - alpha)/d = {s} <= 1")
    return prefactor**m * float(special.zeta(s, start + 1))


def cycle_trace_spectral(spec: Spectrum, m: int) -> CycleTraceEstimate:
    """Power sum of the first ``n_reliable`` eigenvalues plus a Weyl-law tail."""
    if m < 2:
        raise ValueError("m must be >= 2")
    cfg = spec.config
    d = cfg.domain.dim
    p = (d - cfg.alpha) / d
    head = spec.reliable
    tail = weyl_tail_power_sum(weyl_prefactor(cfg.domain, cfg.alpha), p, m, len(head))
    return CycleTraceEstimate(m=m, value=float(np.sum(head**m)) + tail, stderr=0.0, method="spectral")


def write_traces_csv(path, estimates) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["m", "value", "stderr", "method"])
        for e in estimates:
            w.writerow([e.m, repr(float(e.value)), repr(float(e.stderr)), e.method])
