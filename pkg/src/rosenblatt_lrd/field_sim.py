"""Long-range-dependent Gaussian fields and the quadratic functional S_T.

Fields have covariance ``B(r) = (1 + r^beta)^{-gamma}`` so that
``B(r) = L(r) r^{-alpha}`` with ``alpha = beta * gamma`` and the slowly
varying factor ``L(r) = r^{beta gamma} / (1 + r^beta)^gamma``. They are
synthesized on a regular lattice by circulant embedding, which reproduces B
exactly at lattice lags.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache, partial

import numpy as np
from numpy.polynomial import hermite_e
from scipy import fft, stats

from ._parallel import run_shards, seed_sequence, shard_sizes
from .domains import Ball, Box, Domain, Interval, domain_from_dict
from .errors import NumericalError, ParameterRangeError
from .rosenblatt import RosenblattSpec, cdf

__all__ = [
    "FieldConfig",
    "FieldRealization",
    "ConvergenceRow",
    "covariance",
    "slowly_varying_L",
    "normalizer",
    "circulant_eigenvalues",
    "simulate_field",
    "functional_S_T",
    "hermite_coeffs",
    "functional_S_T_general",
    "sample_functionals",
    "condition_a2_sup",
    "convergence_report",
    "write_convergence_csv",
    "write_realization",
    "read_realization",
]

_MAX_LATTICE = 2**24
_CLIP_TOL = 1e-6
_REP_SHARD = 20
_GH_NODES = 128


@dataclass(frozen=True)
class FieldConfig:
    """Parameters of one field experiment on the scaled domain ``D(T) = T * D``."""

    beta: float
    gamma_exp: float
    T: float
    grid_step: float
    domain: Domain
    d: int | None = None

    def __post_init__(self):
        dim = self.domain.dim
        if self.d is None:
            object.__setattr__(self, "d", dim)
        if self.d != dim:
            raise ValueError(f"d={self.d} does not match the domain dimension {dim}")
        if self.d not in (1, 2):
            raise ValueError("fields are simulated in d = 1 or 2")
        if not isinstance(self.domain, (Interval, Box, Ball)):
            raise ValueError("domain must be an Interval, Box or Ball")
        if not self.domain.contains_origin():
            raise ValueError("the domain must contain the origin (possibly on its boundary)")
        if not 0 < self.beta <= 2:
            raise ParameterRangeError("beta must lie in (0, 2]")
        if self.gamma_exp <= 0:
            raise ParameterRangeError("gamma must be positive")
        if not 0 < self.alpha < self.d / 2:
            raise ParameterRangeError(f"alpha = beta * gamma = {self.alpha} must lie in (0, {self.d / 2})")
        if self.T <= 0 or self.grid_step <= 0:
            raise ValueError("T and grid_step must be positive")
        if self.grid_step > self.T * self.domain.diameter() / 64:
            raise ValueError("grid_step must be <= diameter(D(T)) / 64")
        if np.prod(self.lattice_shape, dtype=float) > _MAX_LATTICE:
            raise ValueError(f"lattice exceeds {_MAX_LATTICE} points")

    @property
    def alpha(self) -> float:
        return self.beta * self.gamma_exp

    @property
    def lattice_origin(self) -> np.ndarray:
        return self.T * self.domain.bounds()[0]

    @property
    def lattice_shape(self) -> tuple[int, ...]:
        lo, hi = self.domain.bounds()
        ext = self.T * (hi - lo) / self.grid_step
        return tuple(int(max(1, math.ceil(e - 1e-9))) for e in ext)

    def with_T(self, T: float) -> "FieldConfig":
        return replace(self, T=float(T))

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "beta": self.beta,
            "gamma": self.gamma_exp,
            "T": self.T,
            "grid_step": self.grid_step,
            "domain": self.domain.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FieldConfig":
        return cls(
            beta=float(data["beta"]),
            gamma_exp=float(data["gamma"]),
            T=float(data["T"]),
            grid_step=float(data["grid_step"]),
            domain=domain_from_dict(data["domain"]),
            d=data.get("d"),
        )


def covariance(config: FieldConfig, z) -> np.ndarray:
    """``B(|z|) = (1 + |z|^beta)^{-gamma}``. In d=1 ``z`` holds scalar lags, in d=2 vectors along the last axis."""
    z = np.asarray(z, float)
    r = np.abs(z) if config.d == 1 else np.linalg.norm(z, axis=-1)
    return _cov_r(r, config.beta, config.gamma_exp)


def _cov_r(r, beta, gamma):
    return (1.0 + np.asarray(r, float) ** beta) ** (-gamma)


def slowly_varying_L(r, beta: float, gamma: float):
    """``L(r) = r^{beta gamma} / (1 + r^beta)^gamma``, computed stably."""
    r = np.asarray(r, float)
    with np.errstate(divide="ignore"):
        val = np.exp(-gamma * np.log1p(r ** (-beta)))
    return val if val.ndim else float(val)


def normalizer(config: FieldConfig) -> float:
    """``d_T = T^{d - alpha} L(T)``."""
    return config.T ** (config.d - config.alpha) * slowly_varying_L(config.T, config.beta, config.gamma_exp)


# -- synthesis --------------------------------------------------------------


@dataclass(frozen=True)
class _Embedding:
    sqrt_eig: np.ndarray
    shape: tuple[int, ...]
    clipped_mass: float


@lru_cache(maxsize=8)
def _embedding(beta: float, gamma: float, shape: tuple[int, ...], step: float) -> _Embedding:
    last = None
    for pad in (1, 2, 4):
        sizes = tuple(fft.next_fast_len(pad * 2 * max(n - 1, 1)) for n in shape)
        if np.prod(sizes, dtype=float) > 8 * _MAX_LATTICE:
            break
        eig = circulant_eigenvalues(beta, gamma, sizes, step)
        neg = -float(eig[eig < 0].sum()) if np.any(eig < 0) else 0.0
        mass = neg / float(eig[eig > 0].sum())
        if neg == 0.0 or mass < _CLIP_TOL:
            sq = np.sqrt(np.maximum(eig, 0.0) / eig.size)
            return _Embedding(sq, shape, mass)
        last = mass
    raise NumericalError(f"circulant embedding is indefinite (clipped mass {last:.3g}); refine the grid or enlarge T")


def circulant_eigenvalues(beta: float, gamma: float, sizes, step: float) -> np.ndarray:
    """Eigenvalues of the periodic (wrapped) covariance on a torus of ``sizes`` cells."""
    axes = [step * np.minimum(np.arange(m), m - np.arange(m)) for m in sizes]
    mesh = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(sum(a * a for a in mesh))
    return fft.fftn(_cov_r(r, beta, gamma)).real


def _field_pair(emb: _Embedding, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # real and imaginary parts are two independent fields with the target covariance
    xi = rng.standard_normal((2,) + emb.sqrt_eig.shape)
    w = fft.fftn(emb.sqrt_eig * (xi[0] + 1j * xi[1]))
    cut = tuple(slice(0, n) for n in emb.shape)
    return w.real[cut], w.imag[cut]


def _lattice_nodes(config: FieldConfig) -> np.ndarray:
    h = config.grid_step
    axes = [o + (np.arange(n) + 0.5) * h for o, n in zip(config.lattice_origin, config.lattice_shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@lru_cache(maxsize=8)
def _mask(config: FieldConfig) -> np.ndarray:
    nodes = _lattice_nodes(config)
    inside = config.domain.scaled(config.T).contains(nodes if config.d > 1 else nodes[:, 0])
    mask = np.asarray(inside, bool).reshape(config.lattice_shape)
    mask.setflags(write=False)
    return mask


@dataclass(frozen=True)
class FieldRealization:
    """One lattice sample. ``mask`` marks cells whose midpoints lie in D(T)."""

    values: np.ndarray
    mask: np.ndarray
    config: FieldConfig
    clipped_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericalError("non-finite field values")

    @property
    def cell_volume(self) -> float:
        return self.config.grid_step**self.config.d

    @property
    def inside(self) -> np.ndarray:
        return self.values[self.mask]


def simulate_field(config: FieldConfig, seed=0) -> FieldRealization:
    """Stationary Gaussian field with covariance B on the lattice covering D(T)."""
    emb = _embedding(config.beta, config.gamma_exp, config.lattice_shape, config.grid_step)
    rng = np.random.default_rng(seed_sequence(seed))
    values, _ = _field_pair(emb, rng)
    return FieldRealization(values, _mask(config), config, emb.clipped_mass)


# -- functionals ------------------------------------------------------------


def functional_S_T(real: FieldRealization) -> float:
    """``S_T = (1/d_T) sum_{cells in D(T)} (Y^2 - 1) h^d``."""
    y = real.inside
    return float(np.sum(y * y - 1.0) * real.cell_volume / normalizer(real.config))


def hermite_coeffs(G, k_max: int) -> np.ndarray:
    """``C_k = E[G(Y) H_k(Y)]`` for k = 0..k_max with probabilists' Hermite H_k.

    128-node Gauss-Hermite quadrature against the standard normal weight.
    """
    x, w = hermite_e.hermegauss(_GH_NODES)
    w = w / math.sqrt(2 * math.pi)
    g = np.asarray(G(x), float) * w
    out = np.array([g @ hermite_e.hermeval(x, np.eye(k_max + 1)[k]) for k in range(k_max + 1)])
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite Hermite coefficient")
    return out


def functional_S_T_general(real: FieldRealization, G, c0: float | None = None) -> float:
    """``(1/d_T) [sum G(Y) h^d - C_0 |D(T)|]`` with |D(T)| the lattice volume.

    Using the lattice volume makes the centering exact on the lattice, so a
    constant added to G leaves the value unchanged.
    """
    if c0 is None:
        c0 = hermite_coeffs(G, 0)[0]
    y = real.inside
    vol = y.size * real.cell_volume
    return float((np.sum(G(y)) * real.cell_volume - c0 * vol) / normalizer(real.config))


def _functional_shard(task, config: FieldConfig, G, c0):
    count, ss = task
    emb = _embedding(config.beta, config.gamma_exp, config.lattice_shape, config.grid_step)
    mask = _mask(config)
    rng = np.random.default_rng(ss)
    out = np.empty((count, 1 if G is None else 2))
    for i in range(0, count, 2):
        pair = _field_pair(emb, rng)
        for j in range(min(2, count - i)):
            real = FieldRealization(pair[j], mask, config, emb.clipped_mass)
            out[i + j, 0] = functional_S_T(real)
            if G is not None:
                out[i + j, 1] = functional_S_T_general(real, G, c0)
    return out


def sample_functionals(config: FieldConfig, n_reps: int, seed=0, workers: int = 1, G=None) -> np.ndarray:
    """``n_reps`` independent draws of S_T, plus S_T^G as a second column if ``G`` is given.

    ``G`` must be picklable when ``workers > 1`` (e.g. a ``HermiteE`` series).
    """
    c0 = None if G is None else hermite_coeffs(G, 0)[0]
    sizes = shard_sizes(n_reps, _REP_SHARD)
    kids = seed_sequence(seed).spawn(len(sizes))
    fn = partial(_functional_shard, config=config, G=G, c0=c0)
    out = np.concatenate(run_shards(fn, zip(sizes, kids), workers))
    return out[:, 0] if G is None else out


def condition_a2_sup(beta: float, gamma: float, domain: Domain, T_values, n_pairs: int = 10**4, seed=0) -> float:
    """``sup L(T |x1 - x2|) / L(T)`` over sampled pairs in D and the given T.

    L increases in r, so the diameter is included as the worst pair.
    """
    pts = np.asarray(domain.sample_uniform(2 * n_pairs, seed=seed), float).reshape(2 * n_pairs, -1)
    r = np.linalg.norm(pts[:n_pairs] - pts[n_pairs:], axis=1)
    r = np.append(r[r > 0], domain.diameter())
    return max(float(np.max(slowly_varying_L(T * r, beta, gamma)) / slowly_varying_L(T, beta, gamma)) for T in T_values)


# -- convergence ------------------------------------------------------------


@dataclass(frozen=True)
class ConvergenceRow:
    T: float
    ks: float
    mean: float
    var: float
    n_reps: int


def convergence_report(base: FieldConfig, T_list, n_reps: int, spec: RosenblattSpec, seed=0, workers: int = 1) -> list[ConvergenceRow]:
    """KS distance of S_T to the limit cdf, with sample mean and variance, per T.

    Each T gets its own child seed, so rows do not depend on the other T
    values requested beyond their sorted position.
    """
    if spec.domain is not None and spec.domain != base.domain:
        raise ValueError("spec and field config use different domains")
    if abs(spec.alpha - base.alpha) > 1e-12:
        raise ValueError("spec and field config use different alpha")
    Ts = sorted(float(t) for t in T_list)
    kids = seed_sequence(seed).spawn(len(Ts))
    rows = []
    for T, ss in zip(Ts, kids):
        s = sample_functionals(base.with_T(T), n_reps, ss, workers)
        ks = stats.kstest(s, lambda x: cdf(spec, x)).statistic
        rows.append(ConvergenceRow(T, float(ks), float(s.mean()), float(s.var(ddof=1)), int(n_reps)))
    return rows


def write_convergence_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "ks", "mean", "var", "n_reps"])
        for r in rows:
            w.writerow([repr(r.T), repr(r.ks), repr(r.mean), repr(r.var), r.n_reps])


def write_realization(real: FieldRealization, stem) -> tuple[str, str]:
    """Dump values as little-endian float64 (C order) plus a JSON geometry sidecar."""
    stem = str(stem)
    bin_path, json_path = stem + ".bin", stem + ".json"
    real.values.astype("<f8").tofile(bin_path)
    geometry = {
        "shape": list(real.values.shape),
        "dtype": "<f8",
        "order": "C",
        "grid_step": real.config.grid_step,
        "lattice_origin": real.config.lattice_origin.tolist(),
        "cells_in_domain": int(real.mask.sum()),
        "clipped_mass": real.clipped_mass,
        "config": real.config.to_dict(),
    }
    with open(json_path, "w") as fh:
        json.dump(geometry, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return bin_path, json_path


def read_realization(stem) -> FieldRealization:
    stem = str(stem)
    with open(stem + ".json") as fh:
        geometry = json.load(fh)
    config = FieldConfig.from_dict(geometry["config"])
    values = np.fromfile(stem + ".bin", dtype="<f8").reshape(geometry["shape"])
    return FieldRealization(values, _mask(config), config, geometry["clipped_mass"])
