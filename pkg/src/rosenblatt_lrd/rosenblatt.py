"""The Rosenblatt-type law ``S = sum_k lambda_k (eps_k^2 - 1)``.

Here ``lambda_k`` are the eigenvalues of the Riesz operator on D and ``eps_k``
are i.i.d. standard normal. Only the leading ``K`` eigenvalues are kept; the
remainder enters as a centred Gaussian with matching variance
``2 * tail_var``, where ``tail_var = Tr(K^2) - sum_{k <= K} lambda_k^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._parallel import run_shards, seed_sequence, shard_sizes
from .cycle_traces import weyl_tail_power_sum
from .domains import Domain, domain_from_dict
from .errors import NumericalError, ParameterRangeError
from .riesz_spectrum import RieszConfig, eigenvalues, trace_squared, weyl_prefactor

__all__ = [
    "RosenblattSpec",
    "build_spec",
    "riesz_constant",
    "char_fn",
    "cumulants",
    "sample",
    "density",
    "cdf",
    "sf",
    "density_bound",
]

_MIN_TERMS = 8
_SAMPLE_SHARD = 1 << 15


def riesz_constant(d: int, alpha: float) -> float:
    """``c(d, alpha) = Gamma((d - alpha)/2) / (pi^{d/2} 2^alpha Gamma(alpha/2))``."""
    return math.gamma((d - alpha) / 2) / (math.pi ** (d / 2) * 2**alpha * math.gamma(alpha / 2))


@dataclass(frozen=True, eq=False)
class RosenblattSpec:
    """Truncated eigenvalue description of the limit law.

    Attributes
    ----------
    d, alpha : dimension and kernel exponent, ``0 < alpha < d/2``.
    domain : the domain D, or None for synthetic spectra.
    lambdas : leading eigenvalues, positive and non-increasing.
    tail_var : ``sum_{k > K} lambda_k^2``, i.e. half the variance not carried
        by the explicit terms.
    """

    d: int
    alpha: float
    domain: Domain | None
    lambdas: np.ndarray
    tail_var: float = 0.0
    resolution: int | None = field(default=None, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.lambdas, float).reshape(-1)
        if lam.size == 0 or np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ValueError("lambdas must be positive and non-increasing")
        if self.tail_var < -1e-9:
            raise ValueError(f"tail_var must be non-negative, got {self.tail_var}")
        if not 0 < self.alpha < self.d / 2:
            raise ParameterRangeError(f"alpha must lie in (0, {self.d / 2})")
        lam.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "tail_var", max(float(self.tail_var), 0.0))

    def __eq__(self, other):
        if not isinstance(other, RosenblattSpec):
            return NotImplemented
        return (
            (self.d, self.alpha, self.domain, self.tail_var) == (other.d, other.alpha, other.domain, other.tail_var)
            and np.array_equal(self.lambdas, other.lambdas)
        )

    __hash__ = object.__hash__

    @property
    def K(self) -> int:
        return len(self.lambdas)

    @property
    def kappa2(self) -> float:
        return 2.0 * (float(np.sum(self.lambdas**2)) + self.tail_var)

    def power_sum(self, m: int) -> float:
        """``c_m = sum_k lambda_k^m`` including the contribution beyond ``K``."""
        head = float(np.sum(self.lambdas**m))
        if m == 2:
            return head + self.tail_var
        if self.domain is None:
            return head
        p = (self.d - self.alpha) / self.d
        return head + weyl_tail_power_sum(weyl_prefactor(self.domain, self.alpha), p, m, self.K)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "alpha": self.alpha,
            "domain": None if self.domain is None else self.domain.to_dict(),
            "lambdas": [float(v) for v in self.lambdas],
            "tail_var": self.tail_var,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RosenblattSpec":
        dom = data.get("domain")
        return cls(
            d=int(data["d"]),
            alpha=float(data["alpha"]),
            domain=None if dom is None else domain_from_dict(dom),
            lambdas=np.asarray(data["lambdas"], float),
            tail_var=float(data["tail_var"]),
        )


def build_spec(domain: Domain, alpha: float, resolution: int = 2000, K: int = 200, **trace_kwargs) -> RosenblattSpec:
    """Assemble the limit law for ``(D, alpha)`` from the operator spectrum.

    Extra keyword arguments go to :func:`trace_squared` (used only for
    domains without a closed-form trace).
    """
    d = domain.dim
    if not 0 < alpha < d / 2:
        raise ParameterRangeError(f"alpha must lie in (0, {d / 2}) for the limit law")
    spec = eigenvalues(RieszConfig(domain, alpha, resolution), K)
    if K > spec.n_reliable:
        raise ValueError(f"K = {K} exceeds the {spec.n_reliable} reliable eigenvalues at this resolution")
    tr = float(trace_squared(domain, alpha, **trace_kwargs))
    tail = tr - float(np.sum(spec.eigenvalues**2))
    return RosenblattSpec(d, alpha, domain, spec.eigenvalues, max(tail, 0.0), resolution=resolution)


# -- characteristic function ------------------------------------------------


def _log_cf(spec: RosenblattSpec, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, float)
    out = np.empty(z.shape, complex)
    flat = z.reshape(-1)
    res = out.reshape(-1)
    lam = spec.lambdas
    for start in range(0, flat.size, 2048):
        zz = flat[start : start + 2048, None]
        w = 2j * zz * lam
        # e^{-i z lam} (1 - 2 i z lam)^{-1/2}, principal branch (Re(1 - w) = 1)
        terms = -0.5 * w - 0.5 * np.log1p(-w)
        res[start : start + 2048] = terms.sum(axis=1) - flat[start : start + 2048] ** 2 * spec.tail_var
    return out


def char_fn(spec: RosenblattSpec, z):
    """``E exp(i z S)``; accepts scalars or arrays."""
    val = np.exp(_log_cf(spec, np.asarray(z, float)))
    return val if val.ndim else complex(val)


def cumulants(spec: RosenblattSpec, m_max: int) -> np.ndarray:
    """``[kappa_1, ..., kappa_{m_max}]`` with ``kappa_m = 2^{m-1} (m-1)! c_m``."""
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    out = np.zeros(m_max)
    for m in range(2, m_max + 1):
        out[m - 1] = 2.0 ** (m - 1) * math.factorial(m - 1) * spec.power_sum(m)
    return out


def density_bound(spec: RosenblattSpec) -> float:
    """Upper bound ``1 / (2 sqrt(lambda_1 lambda_2))`` on the density of S.

    The density of ``lambda_1 eps_1^2 + lambda_2 eps_2^2`` is at most this
    value and convolving with the remaining independent terms cannot raise
    the supremum.
    """
    if spec.K < 2:
        raise ValueError("need at least two eigenvalues")
    return 1.0 / (2.0 * math.sqrt(spec.lambdas[0] * spec.lambdas[1]))


# -- sampling ---------------------------------------------------------------


def _sample_shard(task, lambdas, tail_sd):
    size, ss = task
    rng = np.random.default_rng(ss)
    eps = rng.standard_normal((size, len(lambdas)))
    draws = (eps * eps - 1.0) @ lambdas
    if tail_sd > 0:
        draws += tail_sd * rng.standard_normal(size)
    return draws


def sample(spec: RosenblattSpec, n: int, seed=0, workers: int = 1) -> np.ndarray:
    """Draw ``n`` variates from the truncated chi-square series.

    Each draw is ``sum_k lambda_k (eps_k^2 - 1) + N(0, 2 tail_var)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sizes = shard_sizes(n, _SAMPLE_SHARD)
    kids = seed_sequence(seed).spawn(len(sizes))
    fn = partial(_sample_shard, lambdas=np.array(spec.lambdas), tail_sd=math.sqrt(2 * spec.tail_var))
    return np.concatenate(run_shards(fn, zip(sizes, kids), workers))


# -- inversion --------------------------------------------------------------


def _require_terms(spec: RosenblattSpec):
    if spec.K < _MIN_TERMS:
        raise ValueError(f"inversion needs at least {_MIN_TERMS} eigenvalues, got {spec.K}")


def _frequency_grid(spec: RosenblattSpec, xmin: float, xmax: float, tol: float = 1e-14):
    """Step and cutoff for Fourier inversion over a window containing [xmin, xmax].

    The step makes the period exceed the effective support so aliased
    copies fall where the density is below double precision; the cutoff is
    where ``|psi|`` drops under ``tol``.
    """
    sd = math.sqrt(spec.kappa2)
    lam1 = spec.lambdas[0]
    lo = min(xmin, -10.0 * sd)
    hi = max(xmax, 10.0 * sd + 80.0 * lam1)
    step = 2 * math.pi / (hi - lo + 10.0 * sd)

    def log_abs(z):
        return -0.25 * np.sum(np.log1p(4 * z * z * spec.lambdas**2)) - z * z * spec.tail_var

    target = math.log(tol)
    top = 1.0
    while log_abs(top) > target:
        top *= 2
    a, b = 0.0, top
    for _ in range(60):
        mid = 0.5 * (a + b)
        a, b = (mid, b) if log_abs(mid) > target else (a, mid)
    return step, b


def density(spec: RosenblattSpec, x_grid) -> np.ndarray:
    """Density of S on ``x_grid`` by trapezoidal Fourier inversion of :func:`char_fn`."""
    _require_terms(spec)
    x = np.asarray(x_grid, float)
    step, zmax = _frequency_grid(spec, float(x.min()), float(x.max()))
    z = np.arange(0.0, zmax + step, step)
    psi = char_fn(spec, z)
    wts = np.full(z.size, step)
    wts[0] = wts[-1] = 0.5 * step
    flat = x.reshape(-1)
    out = np.empty(flat.size)
    for start in range(0, flat.size, 256):
        xs = flat[start : start + 256]
        out[start : start + 256] = (np.exp(-1j * np.outer(xs, z)) * psi).real @ wts / math.pi
    if out.min() < -1e-9:
        raise NumericalError(f"inverted density reached {out.min():.3g}; increase truncation")
    return np.maximum(out, 0.0).reshape(x.shape)


def _gil_pelaez(spec: RosenblattSpec, x: np.ndarray) -> np.ndarray:
    # midpoint rule of the Gil-Pelaez integral: sum_j Im(psi(u_j) e^{-i u_j x}) / (pi (j + 1/2))
    step, zmax = _frequency_grid(spec, float(x.min()), float(x.max()))
    j = np.arange(int(math.ceil(zmax / step)) + 1)
    u = (j + 0.5) * step
    psi = char_fn(spec, u) / (math.pi * (j + 0.5))
    flat = x.reshape(-1)
    out = np.empty(flat.size)
    for start in range(0, flat.size, 256):
        xs = flat[start : start + 256]
        out[start : start + 256] = (np.exp(-1j * np.outer(xs, u)) * psi).imag.sum(axis=1)
    return out.reshape(x.shape)


def _monotone(xa: np.ndarray, val: np.ndarray, increasing: bool) -> np.ndarray:
    # removes rounding-level (~1e-16) wiggles in the flat tails
    order = np.argsort(xa, kind="stable")
    seq = val[order] if increasing else val[order][::-1]
    seq = np.maximum.accumulate(seq)
    out = np.empty_like(val)
    out[order] = seq if increasing else seq[::-1]
    return out


def cdf(spec: RosenblattSpec, x):
    """``P[S <= x]`` by Gil-Pelaez inversion; clipped to [0, 1], monotone in x."""
    _require_terms(spec)
    xa = np.atleast_1d(np.asarray(x, float)).reshape(-1)
    val = _monotone(xa, np.clip(0.5 - _gil_pelaez(spec, xa), 0.0, 1.0), True)
    return val.reshape(np.shape(x)) if np.ndim(x) else float(val[0])


def sf(spec: RosenblattSpec, x):
    """``P[S > x]`` computed directly, accurate deep in the right tail."""
    _require_terms(spec)
    xa = np.atleast_1d(np.asarray(x, float)).reshape(-1)
    val = _monotone(xa, np.clip(0.5 + _gil_pelaez(spec, xa), 0.0, 1.0), False)
    return val.reshape(np.shape(x)) if np.ndim(x) else float(val[0])
