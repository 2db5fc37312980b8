"""Lévy-Khintchine structure of the limit law and its OU-type representation.

The Lévy measure of ``S = sum_k lambda_k (eps_k^2 - 1)`` lives on (0, inf)
with density

    q(u) = (1 / 2u) sum_k exp(-u / (2 lambda_k)),

so ``u q(u)`` is the Laplace transform of the Thorin measure
``(1/2) sum_k delta_{1/(2 lambda_k)}``. The same law is the stationary
marginal of an OU-type process, ``S = int_0^inf e^{-u} dZ(u)``, driven by
``Z = sum_k lambda_k A_k`` with ``A(t) = gamma_{1/2}(N(t/2)) - t``: a
compound Poisson process of rate 1/2 with exponential jumps of mean 2,
compensated by the unit drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import integrate, special

from ._parallel import run_shards, seed_sequence, shard_sizes
from .riesz_spectrum import weyl_prefactor
from .rosenblatt import RosenblattSpec

__all__ = [
    "LevyView",
    "levy_density",
    "power_series_G",
    "levy_moment",
    "thorin_atoms",
    "background_levy_variance",
    "sample_background_levy",
    "ou_integral",
    "sample_ou_stationary",
]

_OU_SHARD = 500


@dataclass(frozen=True)
class LevyView:
    """Lévy-side view of a :class:`RosenblattSpec`.

    ``k_used`` eigenvalues are summed explicitly. With ``weyl_tail`` the
    infinitely many remaining ones are represented by the Weyl law
    ``lambda_k ~ C k^{-(d - alpha)/d}``, which is what fixes the small-u
    behaviour of q.
    """

    spec: RosenblattSpec
    k_used: int | None = None
    weyl_tail: bool = True

    def __post_init__(self):
        k = self.spec.K if self.k_used is None else int(self.k_used)
        if not 1 <= k <= self.spec.K:
            raise ValueError(f"k_used must lie in [1, {self.spec.K}]")
        object.__setattr__(self, "k_used", k)
        if self.spec.domain is None:
            object.__setattr__(self, "weyl_tail", False)

    @property
    def lambdas(self) -> np.ndarray:
        return self.spec.lambdas[: self.k_used]

    @property
    def tail_sq(self) -> float:
        """``sum_{k > k_used} lambda_k^2`` (exact through ``tail_var``)."""
        return self.spec.tail_var + float(np.sum(self.spec.lambdas[self.k_used :] ** 2))

    def _weyl(self):
        s = self.spec
        return weyl_prefactor(s.domain, s.alpha), (s.d - s.alpha) / s.d


def _tail_exp_sum(view: LevyView, u: np.ndarray) -> np.ndarray:
    """``sum_{k > k_used} exp(-u / (2 C k^{-p}))`` by the midpoint-rule integral."""
    C, p = view._weyl()
    b = u / (2 * C)
    a = 1.0 / p
    start = view.k_used + 0.5
    return a * b ** (-a) * special.gamma(a) * special.gammaincc(a, b * start**p)


def _exp_sum(view: LevyView, u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, float)
    flat = u.reshape(-1)
    out = np.empty(flat.size)
    inv = 1.0 / (2.0 * view.lambdas)
    for start in range(0, flat.size, 4096):
        out[start : start + 4096] = np.exp(-np.outer(flat[start : start + 4096], inv)).sum(axis=1)
    if view.weyl_tail:
        out += _tail_exp_sum(view, flat)
    return out.reshape(u.shape)


def levy_density(view: LevyView, u):
    """Lévy density ``q(u) = (1/2u) sum_k exp(-u / 2 lambda_k)`` for u > 0."""
    ua = np.asarray(u, float)
    if np.any(ua <= 0):
        raise ValueError("the Lévy density is defined for u > 0")
    val = _exp_sum(view, ua) / (2.0 * ua)
    return val if val.ndim else float(val)


def power_series_G(view: LevyView, x):
    """``G(x) = sum_k x^{1/(2 lambda_k)}`` for 0 < x < 1; ``G(e^{-u}) = 2u q(u)``."""
    xa = np.asarray(x, float)
    if np.any((xa <= 0) | (xa >= 1)):
        raise ValueError("x must lie in (0, 1)")
    val = _exp_sum(view, -np.log(xa))
    return val if val.ndim else float(val)


def levy_moment(view: LevyView, order: int = 2) -> float:
    """``int_0^inf u^order q(u) du`` by adaptive quadrature (order >= 2)."""
    lam1 = float(view.lambdas[0])
    f = lambda u: u ** (order - 1) * _exp_sum(view, np.array([u]))[0] / 2.0
    edges = [0.0] + list(lam1 * np.logspace(-8, 0, 9)) + [10 * lam1, 60 * lam1, 200 * lam1]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(f, a, b, limit=200, epsabs=0, epsrel=1e-11)[0]
    return total


def thorin_atoms(view: LevyView) -> list[tuple[float, float]]:
    """Atoms ``(1 / (2 lambda_k), 1/2)`` of the Thorin measure, ascending; ties merged."""
    loc = 1.0 / (2.0 * view.lambdas)
    uniq, counts = np.unique(loc, return_counts=True)
    return [(float(x), 0.5 * int(c)) for x, c in zip(uniq, counts)]


def background_levy_variance(view: LevyView, t: float = 1.0) -> float:
    """``Var Z(t) = 4 t sum_k lambda_k^2``: each A(1) has variance (1/2) * E[J^2] = 4."""
    return 4.0 * t * (float(np.sum(view.lambdas**2)) + view.tail_sq)


def sample_background_levy(view: LevyView, t: float, seed=0, size: int | None = None):
    """Draw ``Z(t) = sum_k lambda_k A_k(t)`` (plus a Gaussian for the omitted terms)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    rng = np.random.default_rng(seed_sequence(seed))
    rows = 1 if size is None else int(size)
    lam = view.lambdas
    counts = rng.poisson(t / 2.0, (rows, len(lam)))
    # a gamma sum of N exponential jumps with mean 2; zero when N = 0
    jumps = np.where(counts > 0, rng.gamma(np.maximum(counts, 1), 2.0), 0.0)
    z = (jumps - t) @ lam
    if view.tail_sq > 0 and t > 0:
        z = z + math.sqrt(4.0 * t * view.tail_sq) * rng.standard_normal(rows)
    return float(z[0]) if size is None else z


def _euler_weight(times: np.ndarray, step: float) -> np.ndarray:
    # e^{-u} at the midpoint of the step containing each jump time
    return np.exp(-(np.floor(times / step) + 0.5) * step)


def _drift_integral(horizon: float, step: float) -> float:
    nsteps = int(round(horizon / step))
    return step * float(np.sum(np.exp(-(np.arange(nsteps) + 0.5) * step)))


def ou_integral(lambdas, owner, times, sizes, horizon: float = 20.0, step: float = 1e-2) -> float:
    """One draw of ``int_0^horizon e^{-u} dZ(u)`` from an explicit jump list.

    ``owner[j]`` is the eigenvalue index of jump ``j`` occurring at
    ``times[j]`` with size ``sizes[j]``.
    """
    lam = np.asarray(lambdas, float)
    owner = np.asarray(owner, int)
    jumps = float(np.sum(lam[owner] * np.asarray(sizes, float) * _euler_weight(np.asarray(times, float), step)))
    return jumps - float(np.sum(lam)) * _drift_integral(horizon, step)


def _ou_shard(task, lambdas, horizon, step, tail_sd):
    rows, ss = task
    rng = np.random.default_rng(ss)
    K = len(lambdas)
    counts = rng.poisson(horizon / 2.0, (rows, K))
    flat_owner = np.repeat(np.arange(rows * K), counts.ravel())
    total = flat_owner.size
    times = horizon * rng.random(total)
    sizes = rng.exponential(2.0, total)
    contrib = lambdas[flat_owner % K] * sizes * _euler_weight(times, step)
    draws = np.bincount(flat_owner // K, weights=contrib, minlength=rows)
    draws -= float(np.sum(lambdas)) * _drift_integral(horizon, step)
    if tail_sd > 0:
        draws += tail_sd * rng.standard_normal(rows)
    return draws


def sample_ou_stationary(view: LevyView, n: int, horizon: float = 20.0, step: float = 1e-2, seed=0, workers: int = 1) -> np.ndarray:
    """``n`` draws of ``int_0^horizon e^{-u} dZ(u)``, the OU stationary marginal.

    Jump times of each compound Poisson component are exact; the integrand
    ``e^{-u}`` is frozen at step midpoints (step <= 1e-2). Omitted
    eigenvalues contribute ``N(0, 2 tail_sq (1 - e^{-2 horizon}))``.
    """
    if horizon < 20:
        raise ValueError("horizon must be >= 20")
    if not 0 < step <= 1e-2:
        raise ValueError("step must lie in (0, 1e-2]")
    tail_sd = math.sqrt(2.0 * view.tail_sq * (1.0 - math.exp(-2.0 * horizon)))
    sizes = shard_sizes(n, _OU_SHARD)
    kids = seed_sequence(seed).spawn(len(sizes))
    fn = partial(_ou_shard, lambdas=np.array(view.lambdas), horizon=horizon, step=step, tail_sd=tail_sd)
    return np.concatenate(run_shards(fn, zip(sizes, kids), workers))
