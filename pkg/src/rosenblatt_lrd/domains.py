"""Bounded domains in R^d: geometry, uniform sampling, quadrature grids and
the characteristic function of the uniform distribution on the domain.

Five shapes are supported, each with a closed-form Fourier transform of its
indicator: :class:`Interval`, :class:`Box`, :class:`Ball`,
:class:`UnionOfBalls` and :class:`Annulus`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import special

__all__ = [
    "Domain",
    "Interval",
    "Box",
    "Ball",
    "UnionOfBalls",
    "Annulus",
    "QuadratureGrid",
    "measure",
    "diameter",
    "sample_uniform",
    "indicator_cf",
    "quadrature_grid",
    "distance_density_ball",
    "domain_from_dict",
    "parse_domain",
]

# subsamples per axis used to estimate the area of cells cut by a curved boundary
_SUBSAMPLES = {1: 32, 2: 32, 3: 8}


def _ball_volume(d: int, radius: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d


def _ball_ft_profile(x, d: int):
    """Fourier transform of the unit-ball indicator normalised to 1 at 0.

    Returns ``Gamma(d/2 + 1) (2/x)^{d/2} J_{d/2}(x)`` evaluated elementwise.
    """
    x = np.asarray(x, dtype=float)
    nu = d / 2
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 - xs**2 / (2 * (d + 2)) + xs**4 / (8 * (d + 2) * (d + 4))
    xl = x[~small]
    out[~small] = math.gamma(nu + 1) * (2.0 / xl) ** nu * special.jv(nu, xl)
    return out


class Domain:
    """Base class for bounded domains.

    Subclasses provide ``dim``, :meth:`measure`, :meth:`diameter`,
    :meth:`bounds`, :meth:`contains`, :meth:`indicator_cf` and
    :meth:`to_dict`.
    """

    dim: int

    # -- geometry -----------------------------------------------------------
    def measure(self) -> float:
        raise NotImplementedError

    def diameter(self) -> float:
        raise NotImplementedError

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper corner of the axis-aligned bounding box."""
        raise NotImplementedError

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def contains_origin(self) -> bool:
        """Whether 0 lies in the closure of the domain."""
        return bool(self._closure_contains(np.zeros((1, self.dim)))[0])

    def _closure_contains(self, points) -> np.ndarray:
        return self.contains(points)

    def scaled(self, factor: float) -> "Domain":
        """Homothetic image ``factor * D``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- probability --------------------------------------------------------
    def indicator_cf(self, lam) -> np.ndarray:
        raise NotImplementedError

    def sample_uniform(self, n: int, seed=None) -> np.ndarray:
        """Draw ``n`` i.i.d. uniform points by rejection from the bounding box.

        Parameters
        ----------
        n : int
            Number of points.
        seed : int, SeedSequence or Generator, optional
            Randomness source; equal seeds give equal points.

        Returns
        -------
        ndarray of shape (n, dim)
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        lo, hi = self.bounds()
        acc = self.measure() / float(np.prod(hi - lo))
        out = np.empty((n, self.dim))
        filled = 0
        while filled < n:
            batch = int(min(max((n - filled) / acc * 1.1 + 64, 1024), 4_000_000))
            pts = lo + (hi - lo) * rng.random((batch, self.dim))
            pts = pts[self.contains(pts)]
            take = min(len(pts), n - filled)
            out[filled : filled + take] = pts[:take]
            filled += take
        return out

    # -- discretisation -----------------------------------------------------
    def _cell_status(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Classify cells [lo, hi]: 1 inside, 0 outside, -1 cut by the boundary."""
        raise NotImplementedError

    def _cell_overlap(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray | None:
        """Exact cell ∩ D volumes when available in closed form, else None."""
        return None

    def quadrature_grid(self, resolution: int) -> "QuadratureGrid":
        """Midpoint quadrature on a uniform square-cell partition clipped to D.

        The cell side is ``h = max extent / resolution``. Cells cut by the
        boundary get the volume of cell ∩ D: exact for boxes and intervals,
        estimated by subsampling otherwise, and then rescaled so that the
        weights sum to :meth:`measure`.
        """
        if resolution < 2:
            raise ValueError("resolution must be >= 2")
        lo, hi = self.bounds()
        h = float(np.max(hi - lo)) / resolution
        shape = tuple(int(math.ceil((hi[i] - lo[i]) / h - 1e-9)) for i in range(self.dim))
        idx = np.indices(shape).reshape(self.dim, -1).T
        c_lo = lo + idx * h
        c_hi = c_lo + h
        weights = self._cell_overlap(c_lo, c_hi)
        if weights is None:
            status = self._cell_status(c_lo, c_hi)
            weights = np.where(status == 1, h**self.dim, 0.0)
            cut = np.flatnonzero(status == -1)
            if cut.size:
                weights[cut] = self._subsampled_volume(c_lo[cut], h)
                interior = weights.sum() - weights[cut].sum()
                partial = weights[cut].sum()
                if partial > 0:
                    weights[cut] *= (self.measure() - interior) / partial
        keep = weights > 0
        if keep.sum() < 4:
            raise ValueError(f"resolution {resolution} yields fewer than 4 nodes")
        return QuadratureGrid(
            nodes=(c_lo[keep] + 0.5 * h),
            weights=weights[keep],
            index=idx[keep],
            shape=shape,
            step=h,
            origin=lo.copy(),
        )

    def _subsampled_volume(self, cell_lo: np.ndarray, h: float) -> np.ndarray:
        m = _SUBSAMPLES.get(self.dim, 6)
        offs = (np.indices((m,) * self.dim).reshape(self.dim, -1).T + 0.5) * (h / m)
        out = np.empty(len(cell_lo))
        for start in range(0, len(cell_lo), 256):
            block = cell_lo[start : start + 256]
            pts = block[:, None, :] + offs[None, :, :]
            inside = self.contains(pts.reshape(-1, self.dim)).reshape(len(block), -1)
            out[start : start + 256] = inside.mean(axis=1) * h**self.dim
        return out


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights of a clipped uniform partition.

    ``index`` holds the integer multi-index of each kept cell within the
    bounding-box lattice of ``shape``; cell ``i`` spans
    ``origin + index[i] * step`` to ``origin + (index[i] + 1) * step``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    index: np.ndarray
    shape: tuple
    step: float
    origin: np.ndarray

    def __iter__(self):
        return iter((self.nodes, self.weights))

    def __len__(self):
        return len(self.weights)


def _interval_overlap(lo, hi, a, b):
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


@dataclass(frozen=True)
class Interval(Domain):
    """The interval [a, b] in R^1."""

    a: float = 0.0
    b: float = 1.0
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("Interval requires a < b")

    def measure(self):
        return self.b - self.a

    def diameter(self):
        return self.b - self.a

    def bounds(self):
        return np.array([self.a], float), np.array([self.b], float)

    def contains(self, points):
        x = np.asarray(points, float).reshape(-1, 1)[:, 0]
        return (x >= self.a) & (x <= self.b)

    def scaled(self, factor):
        return Interval(self.a * factor, self.b * factor)

    def to_dict(self):
        return {"type": "interval", "dim": 1, "a": self.a, "b": self.b}

    def indicator_cf(self, lam):
        lam = np.asarray(lam, float).reshape(-1)
        half = 0.5 * lam * (self.b - self.a)
        return np.exp(0.5j * lam * (self.a + self.b)) * np.sinc(half / np.pi)

    def _cell_overlap(self, lo, hi):
        return _interval_overlap(lo[:, 0], hi[:, 0], self.a, self.b)


@dataclass(frozen=True)
class Box(Domain):
    """The box [0, l_1] x ... x [0, l_d] with a corner at the origin."""

    lengths: tuple

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        if not lengths or min(lengths) <= 0:
            raise ValueError("Box side lengths must be positive")
        object.__setattr__(self, "lengths", lengths)

    @property
    def dim(self):
        return len(self.lengths)

    def measure(self):
        return float(np.prod(self.lengths))

    def diameter(self):
        return float(np.sqrt(np.sum(np.square(self.lengths))))

    def bounds(self):
        return np.zeros(self.dim), np.array(self.lengths)

    def contains(self, points):
        x = np.asarray(points, float).reshape(-1, self.dim)
        return np.all((x >= 0) & (x <= np.array(self.lengths)), axis=1)

    def scaled(self, factor):
        return Box(tuple(v * factor for v in self.lengths))

    def to_dict(self):
        return {"type": "box", "dim": self.dim, "lengths": list(self.lengths)}

    def indicator_cf(self, lam):
        lam = np.asarray(lam, float).reshape(-1, self.dim)
        l = np.array(self.lengths)
        half = 0.5 * lam * l
        return np.prod(np.exp(1j * half) * np.sinc(half / np.pi), axis=1)

    def _cell_overlap(self, lo, hi):
        out = np.ones(len(lo))
        for i, l in enumerate(self.lengths):
            out *= _interval_overlap(lo[:, i], hi[:, i], 0.0, l)
        return out


def _center_distance_range(center, lo, hi):
    """Min and max distance from ``center`` to points of each cell."""
    nearest = np.clip(center, lo, hi)
    dmin = np.linalg.norm(nearest - center, axis=1)
    far = np.where(np.abs(lo - center) > np.abs(hi - center), lo, hi)
    dmax = np.linalg.norm(far - center, axis=1)
    return dmin, dmax


@dataclass(frozen=True)
class Ball(Domain):
    """Closed ball of radius ``radius`` about ``center``."""

    center: tuple
    radius: float = 1.0

    def __post_init__(self):
        center = tuple(float(v) for v in np.atleast_1d(self.center))
        if self.radius <= 0:
            raise ValueError("Ball radius must be positive")
        object.__setattr__(self, "center", center)

    @property
    def dim(self):
        return len(self.center)

    def measure(self):
        return _ball_volume(self.dim, self.radius)

    def diameter(self):
        return 2.0 * self.radius

    def bounds(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def contains(self, points):
        x = np.asarray(points, float).reshape(-1, self.dim)
        return np.linalg.norm(x - np.array(self.center), axis=1) <= self.radius

    def scaled(self, factor):
        return Ball(tuple(v * factor for v in self.center), self.radius * factor)

    def to_dict(self):
        return {"type": "ball", "dim": self.dim, "center": list(self.center), "radius": self.radius}

    def indicator_cf(self, lam):
        lam = np.asarray(lam, float).reshape(-1, self.dim)
        c = np.array(self.center)
        norm = np.linalg.norm(lam, axis=1)
        return np.exp(1j * lam @ c) * _ball_ft_profile(self.radius * norm, self.dim)

    def _cell_status(self, lo, hi):
        dmin, dmax = _center_distance_range(np.array(self.center), lo, hi)
        return np.where(dmax <= self.radius, 1, np.where(dmin >= self.radius, 0, -1))


@dataclass(frozen=True)
class Annulus(Domain):
    """Spherical shell ``r_inner <= |x - center| <= r_outer``."""

    center: tuple
    r_inner: float
    r_outer: float

    def __post_init__(self):
        center = tuple(float(v) for v in np.atleast_1d(self.center))
        if not 0 < self.r_inner < self.r_outer:
            raise ValueError("Annulus requires 0 < r_inner < r_outer")
        object.__setattr__(self, "center", center)

    @property
    def dim(self):
        return len(self.center)

    def measure(self):
        return _ball_volume(self.dim, self.r_outer) - _ball_volume(self.dim, self.r_inner)

    def diameter(self):
        return 2.0 * self.r_outer

    def bounds(self):
        c = np.array(self.center)
        return c - self.r_outer, c + self.r_outer

    def contains(self, points):
        x = np.asarray(points, float).reshape(-1, self.dim)
        r = np.linalg.norm(x - np.array(self.center), axis=1)
        return (r >= self.r_inner) & (r <= self.r_outer)

    def scaled(self, factor):
        return Annulus(tuple(v * factor for v in self.center), self.r_inner * factor, self.r_outer * factor)

    def to_dict(self):
        return {
            "type": "annulus",
            "dim": self.dim,
            "center": list(self.center),
            "r_inner": self.r_inner,
            "r_outer": self.r_outer,
        }

    def indicator_cf(self, lam):
        lam = np.asarray(lam, float).reshape(-1, self.dim)
        c = np.array(self.center)
        norm = np.linalg.norm(lam, axis=1)
        vo = _ball_volume(self.dim, self.r_outer)
        vi = _ball_volume(self.dim, self.r_inner)
        prof = vo * _ball_ft_profile(self.r_outer * norm, self.dim) - vi * _ball_ft_profile(
            self.r_inner * norm, self.dim
        )
        return np.exp(1j * lam @ c) * prof / (vo - vi)

    def _cell_status(self, lo, hi):
        dmin, dmax = _center_distance_range(np.array(self.center), lo, hi)
        inside = (dmin >= self.r_inner) & (dmax <= self.r_outer)
        outside = (dmax <= self.r_inner) | (dmin >= self.r_outer)
        return np.where(inside, 1, np.where(outside, 0, -1))


@dataclass(frozen=True)
class UnionOfBalls(Domain):
    """Union of balls with pairwise disjoint interiors (touching is allowed)."""

    balls: tuple

    def __post_init__(self):
        balls = tuple(b if isinstance(b, Ball) else Ball(*b) for b in self.balls)
        if not balls:
            raise ValueError("UnionOfBalls needs at least one ball")
        dims = {b.dim for b in balls}
        if len(dims) != 1:
            raise ValueError("balls must share one dimension")
        for i in range(len(balls)):
            for j in range(i + 1, len(balls)):
                gap = math.dist(balls[i].center, balls[j].center)
                if gap < balls[i].radius + balls[j].radius - 1e-12:
                    raise ValueError(f"balls {i} and {j} overlap")
        object.__setattr__(self, "balls", balls)

    @property
    def dim(self):
        return self.balls[0].dim

    def measure(self):
        return sum(b.measure() for b in self.balls)

    def diameter(self):
        best = max(b.diameter() for b in self.balls)
        for i, bi in enumerate(self.balls):
            for bj in self.balls[i + 1 :]:
                best = max(best, math.dist(bi.center, bj.center) + bi.radius + bj.radius)
        return best

    def bounds(self):
        los, his = zip(*(b.bounds() for b in self.balls))
        return np.min(los, axis=0), np.max(his, axis=0)

    def contains(self, points):
        x = np.asarray(points, float).reshape(-1, self.dim)
        out = np.zeros(len(x), bool)
        for b in self.balls:
            out |= b.contains(x)
        return out

    def scaled(self, factor):
        return UnionOfBalls(tuple(b.scaled(factor) for b in self.balls))

    def to_dict(self):
        return {
            "type": "union",
            "dim": self.dim,
            "balls": [{"center": list(b.center), "radius": b.radius} for b in self.balls],
        }

    def indicator_cf(self, lam):
        lam = np.asarray(lam, float).reshape(-1, self.dim)
        total = sum(b.measure() * b.indicator_cf(lam) for b in self.balls)
        return total / self.measure()

    def _cell_status(self, lo, hi):
        statuses = np.array([b._cell_status(lo, hi) for b in self.balls])
        inside = np.any(statuses == 1, axis=0)
        outside = np.all(statuses == 0, axis=0)
        return np.where(inside, 1, np.where(outside, 0, -1))


# -- functional interface ---------------------------------------------------


def measure(domain: Domain) -> float:
    """Lebesgue measure of ``domain``."""
    return domain.measure()


def diameter(domain: Domain) -> float:
    return domain.diameter()


def sample_uniform(domain: Domain, n: int, seed=None) -> np.ndarray:
    return domain.sample_uniform(n, seed)


def indicator_cf(domain: Domain, lam) -> np.ndarray:
    """Characteristic function of the uniform law on ``domain``.

    ``lam`` may be a single frequency vector or an array of shape (n, dim);
    the result always has shape (n,).
    """
    return domain.indicator_cf(lam)


def quadrature_grid(domain: Domain, resolution: int) -> QuadratureGrid:
    return domain.quadrature_grid(resolution)


def distance_density_ball(T: float, rho, d: int = 2):
    """Density of ``|U - V|`` for U, V independent uniform in a d-ball of radius T.

    ``d rho^{d-1} T^{-d} I_{1-(rho/2T)^2}((d+1)/2, 1/2)`` on [0, 2T], zero beyond,
    where I is the regularised incomplete beta function.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    rho = np.asarray(rho, float)
    inside = (rho >= 0) & (rho <= 2 * T)
    mu = np.clip(1.0 - (rho / (2 * T)) ** 2, 0.0, 1.0)
    val = d * np.where(inside, rho, 0.0) ** (d - 1) * T ** (-d) * special.betainc((d + 1) / 2, 0.5, mu)
    return np.where(inside, val, 0.0)


# -- serialisation ----------------------------------------------------------


def domain_from_dict(block: dict) -> Domain:
    """Rebuild a domain from the key-value block produced by ``to_dict``."""
    kind = str(block["type"]).lower()
    if kind == "interval":
        return Interval(float(block["a"]), float(block["b"]))
    if kind == "box":
        return Box(tuple(_floats(block["lengths"])))
    if kind == "ball":
        return Ball(tuple(_floats(block["center"])), float(block["radius"]))
    if kind == "annulus":
        return Annulus(tuple(_floats(block["center"])), float(block["r_inner"]), float(block["r_outer"]))
    if kind == "union":
        return UnionOfBalls(
            tuple(Ball(tuple(_floats(b["center"])), float(b["radius"])) for b in block["balls"])
        )
    raise ValueError(f"unknown domain type {kind!r}")


def _floats(v) -> list[float]:
    if isinstance(v, str):
        return [float(t) for t in v.replace(" ", "").split(",") if t]
    if isinstance(v, Iterable):
        return [float(t) for t in v]
    return [float(v)]


def parse_domain(text: str) -> Domain:
    """Parse the compact ``type:params`` notation used on the command line.

    ``interval:a,b``; ``box:l1,...,ld``; ``ball:c1,...,cd;R``;
    ``annulus:c1,...,cd;R_in,R_out``; ``union:c..;R|c..;R``.
    """
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "interval":
            a, b = _floats(rest)
            return Interval(a, b)
        if kind == "box":
            return Box(tuple(_floats(rest)))
        if kind == "ball":
            c, r = rest.split(";")
            return Ball(tuple(_floats(c)), float(r))
        if kind == "annulus":
            c, radii = rest.split(";")
            ri, ro = _floats(radii)
            return Annulus(tuple(_floats(c)), ri, ro)
        if kind == "union":
            balls = []
            for part in rest.split("|"):
                c, r = part.split(";")
                balls.append(Ball(tuple(_floats(c)), float(r)))
            return UnionOfBalls(tuple(balls))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"cannot parse domain {text!r}: {exc}") from exc
    raise ValueError(f"unknown domain type {kind!r}")
