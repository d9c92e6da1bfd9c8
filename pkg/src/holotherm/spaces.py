"""Finite metric spaces, grid fibers, contractive IFS and discretized objects.

Every continuous fiber is the interval [0, 1] sampled on a uniform grid.
A point image ``tau_x(z_j)`` that falls between two nodes is represented by
the pair of neighbouring nodes and a linear weight; the same triple
``(lo, hi, w)`` drives both function composition (interpolation) and measure
pushforward (mass splitting), so the two are exact adjoints of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractionError,
    DomainError,
    InvalidDimensionError,
    MapRangeError,
    ShapeError,
    SupportError,
)

_SNAP = 1e-12
MASS_TOL = 1e-12


def _check_metric(metric: np.ndarray, name: str) -> None:
    n = metric.shape[0]
    if metric.ndim != 2 or metric.shape != (n, n) or n < 1:
        raise InvalidDimensionError(f"{name} metric must be a non-empty square matrix")
    if not np.all(np.isfinite(metric)) or np.any(metric < 0):
        raise ValueError(f"{name} metric must be finite and nonnegative")
    if not np.allclose(metric, metric.T, atol=1e-14):
        raise ValueError(f"{name} metric is not symmetric")
    if np.any(np.diag(metric) != 0):
        raise ValueError(f"{name} metric must vanish on the diagonal")
    # d(i,k) <= d(i,j) + d(j,k) for every triple
    via = metric[:, :, None] + metric[None, :, :]
    if np.any(metric[:, None, :] > via + 1e-12):
        raise ValueError(f"{name} metric violates the triangle inequality")


@dataclass(frozen=True, eq=False)
class BaseSpace:
    """Finite parameter space (the X or Y of an IFS)."""

    points: tuple
    metric: np.ndarray

    def __post_init__(self):
        metric = np.asarray(self.metric, dtype=float)
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "metric", metric)
        if len(self.points) != metric.shape[0]:
            raise InvalidDimensionError("number of points and metric size differ")
        _check_metric(metric, "base")

    @property
    def size(self) -> int:
        return len(self.points)

    @classmethod
    def discrete(cls, labels, scale: float = 1.0) -> "BaseSpace":
        """All distinct points at distance ``scale``."""
        labels = tuple(labels)
        n = len(labels)
        metric = scale * (1.0 - np.eye(n))
        return cls(labels, metric)


@dataclass(frozen=True, eq=False)
class FiberSpace:
    """Either a uniform grid on [0, 1] or a finite metric space."""

    kind: str
    nodes: np.ndarray | None = None
    points: tuple | None = None
    metric: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "grid":
            nodes = np.asarray(self.nodes, dtype=float)
            if nodes.ndim != 1 or nodes.size < 2:
                raise InvalidDimensionError("grid fiber needs at least 2 nodes")
            if nodes[0] != 0.0 or nodes[-1] != 1.0 or np.any(np.diff(nodes) <= 0):
                raise ValueError("grid nodes must increase strictly from 0 to 1")
            object.__setattr__(self, "nodes", nodes)
        elif self.kind == "finite":
            metric = np.asarray(self.metric, dtype=float)
            _check_metric(metric, "fiber")
            points = tuple(self.points) if self.points is not None else tuple(range(metric.shape[0]))
            if len(points) != metric.shape[0]:
                raise InvalidDimensionError("number of points and metric size differ")
            object.__setattr__(self, "points", points)
            object.__setattr__(self, "metric", metric)
        else:
            raise ValueError(f"unknown fiber kind {self.kind!r}")

    @property
    def is_grid(self) -> bool:
        return self.kind == "grid"

    @property
    def size(self) -> int:
        return self.nodes.size if self.is_grid else len(self.points)

    @property
    def spacing(self) -> float | None:
        return 1.0 / (self.nodes.size - 1) if self.is_grid else None

    def distance(self) -> np.ndarray:
        if self.is_grid:
            return np.abs(self.nodes[:, None] - self.nodes[None, :])
        return self.metric

    def lipschitz(self, values) -> float:
        """Lipschitz constant of node values along the last axis.

        On a grid this is the exact constant of the piecewise-linear
        interpolant; on a finite fiber it is the max pairwise quotient.
        """
        v = np.asarray(values, dtype=float)
        if self.size == 1:
            return 0.0
        if self.is_grid:
            return float(np.max(np.abs(np.diff(v, axis=-1)))) / self.spacing
        d = self.metric
        off = d > 0
        diffs = np.abs(v[..., :, None] - v[..., None, :])
        return float(np.max(diffs[..., off] / d[off]))


def build_grid(n: int) -> FiberSpace:
    """Uniform grid of ``n`` nodes on [0, 1]."""
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"grid needs n >= 2 nodes, got {n}")
    return FiberSpace("grid", nodes=np.linspace(0.0, 1.0, int(n)))


def finite_fiber(metric, points=None) -> FiberSpace:
    return FiberSpace("finite", points=points, metric=np.asarray(metric, dtype=float))


def singleton_fiber() -> FiberSpace:
    return finite_fiber([[0.0]], points=("z",))


@dataclass(frozen=True, eq=False)
class ContractiveIFS:
    """A family of fiber maps indexed by the points of ``base``.

    Grid fibers take affine branches ``affine[x] = (a, b)``, z -> a z + b.
    Finite fibers take an index table ``table[x, j]``.
    """

    base: BaseSpace
    fiber: FiberSpace
    gamma: float
    affine: np.ndarray | None = None
    table: np.ndarray | None = None
    lo: np.ndarray = field(init=False, repr=False)
    hi: np.ndarray = field(init=False, repr=False)
    w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("contraction factor must lie in (0, 1)")
        nx, nz = self.base.size, self.fiber.size
        if self.fiber.is_grid:
            if self.affine is None:
                raise ShapeError("grid fibers need affine branches")
            ab = np.asarray(self.affine, dtype=float).reshape(nx, 2)
            object.__setattr__(self, "affine", ab)
            images = ab[:, :1] * self.fiber.nodes[None, :] + ab[:, 1:]
            if np.any(images < -_SNAP) or np.any(images > 1 + _SNAP):
                bad = np.argwhere((images < -_SNAP) | (images > 1 + _SNAP))[0]
                raise MapRangeError(
                    f"branch {self.base.points[bad[0]]!r} maps node "
                    f"{self.fiber.nodes[bad[1]]} to {images[tuple(bad)]}, outside [0, 1]"
                )
            pos = np.clip(images, 0.0, 1.0) * (nz - 1)
            lo = np.floor(pos + _SNAP).astype(int)
            lo = np.clip(lo, 0, nz - 1)
            w = pos - lo
            w[np.abs(w) < 1e-10] = 0.0
            hi = np.minimum(lo + 1, nz - 1)
            w[lo == nz - 1] = 0.0
        else:
            if self.table is None:
                raise ShapeError("finite fibers need a branch table")
            tab = np.asarray(self.table, dtype=int).reshape(nx, nz)
            if np.any(tab < 0) or np.any(tab >= nz):
                raise MapRangeError("branch table points outside the fiber")
            object.__setattr__(self, "table", tab)
            lo, hi, w = tab.copy(), tab.copy(), np.zeros((nx, nz))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "w", w)

    @property
    def shape(self) -> tuple[int, int]:
        return self.base.size, self.fiber.size

    def images(self) -> np.ndarray:
        """Coordinates of tau_x(z_j), shape (nx, nz); grid fibers only."""
        return self.affine[:, :1] * self.fiber.nodes[None, :] + self.affine[:, 1:]

    def compose(self, values) -> np.ndarray:
        """Node values of g o tau_x for every branch, shape (nx, nz)."""
        g = np.asarray(values, dtype=float)
        return (1.0 - self.w) * g[self.lo] + self.w * g[self.hi]

    def push(self, weights) -> np.ndarray:
        """Fiber measure sum_x (tau_x)_* weights[x], weights of shape (nx, nz)."""
        m = np.asarray(weights, dtype=float)
        n = self.fiber.size
        out = np.bincount(self.lo.ravel(), weights=(m * (1.0 - self.w)).ravel(), minlength=n)
        out += np.bincount(self.hi.ravel(), weights=(m * self.w).ravel(), minlength=n)
        return out

    def fixed_point_measure(self, x: int, tol: float = 1e-15) -> np.ndarray:
        """Fixed fiber measure of the single discretized branch ``x``.

        For a node-aligned fixed point this is the Dirac mass at that node.
        """
        n = self.fiber.size
        m = np.zeros(n)
        if self.fiber.is_grid:
            a, b = self.affine[x]
            z = b / (1.0 - a)
            m[int(np.argmin(np.abs(self.fiber.nodes - z)))] = 1.0
        else:
            j = 0
            for _ in range(n + 1):
                j = self.table[x, j]
            m[j] = 1.0
        rows = np.zeros((self.base.size, n))
        for _ in range(100_000):
            rows[:] = 0.0
            rows[x] = m
            new = self.push(rows)
            if np.abs(new - m).sum() < tol:
                return new
            m = new
        return m


@dataclass(frozen=True, eq=False)
class ProbMeasure:
    """Probability weights over the points of some space."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.ndim != 1 or w.size == 0:
            raise InvalidDimensionError("measure weights must be a non-empty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("measure weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"measure weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, weights) -> "ProbMeasure":
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        return cls(w / w.sum())

    @classmethod
    def uniform(cls, n: int) -> "ProbMeasure":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def dirac(cls, n: int, i: int) -> "ProbMeasure":
        w = np.zeros(n)
        w[i] = 1.0
        return cls(w)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.weights > 0))

    def require_full_support(self, name: str = "measure") -> "ProbMeasure":
        if not self.full_support:
            raise SupportError(f"{name} must charge every point")
        return self

    def moment(self, nodes, k: int = 1) -> float:
        return float(np.dot(self.weights, np.asarray(nodes, dtype=float) ** k))


def as_measure(m, size: int | None = None, name: str = "measure") -> ProbMeasure:
    if not isinstance(m, ProbMeasure):
        m = ProbMeasure(np.asarray(m, dtype=float))
    if size is not None and m.size != size:
        raise ShapeError(f"{name} has {m.size} weights, expected {size}")
    return m


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values of a fiber function together with a Lipschitz bound."""

    values: np.ndarray
    fiber: FiberSpace
    lip: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).copy()
        if v.shape != (self.fiber.size,):
            raise ShapeError(f"expected {self.fiber.size} node values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        measured = self.fiber.lipschitz(v)
        if self.lip is None:
            object.__setattr__(self, "lip", measured)
        elif self.lip < measured * (1 - 1e-9) - 1e-12:
            raise ValueError(f"recorded lip {self.lip} below measured {measured}")

    @property
    def measured_lip(self) -> float:
        return self.fiber.lipschitz(self.values)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    @classmethod
    def sample(cls, fiber: FiberSpace, func) -> "GridFunction":
        """Node values of a callable on a grid fiber."""
        return cls(np.asarray(func(fiber.nodes), dtype=float) * np.ones(fiber.size), fiber)


def eval_function(f: GridFunction, z):
    """Piecewise-linear interpolation of ``f`` at ``z`` in [0, 1]."""
    if not f.fiber.is_grid:
        raise DomainError("eval_function needs a grid fiber")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0.0) or np.any(z_arr > 1.0) or not np.all(np.isfinite(z_arr)):
        raise DomainError(f"evaluation point outside [0, 1]: {z}")
    out = np.interp(z_arr, f.fiber.nodes, f.values)
    return float(out) if out.ndim == 0 else out


def pushforward_measure(ifs: ContractiveIFS, x: int, m) -> ProbMeasure:
    """Image of the fiber measure ``m`` under the branch ``tau_x``."""
    m = as_measure(m, ifs.fiber.size)
    rows = np.zeros(ifs.shape)
    rows[x] = m.weights
    out = ifs.push(rows)
    return ProbMeasure(out / out.sum())


@dataclass(frozen=True)
class ContractionReport:
    max_ratio: float
    gamma: float
    passed: bool
    pairs_checked: int
    witness: tuple | None = None


def verify_contraction(ifs: ContractiveIFS, samples: int = 1000, seed: int = 0,
                       gamma: float | None = None, raise_on_fail: bool = True) -> ContractionReport:
    """Certify d(tau_x1 z1, tau_x2 z2) <= gamma (d(x1,x2) + d(z1,z2)).

    Affine branches: the corners z in {0, 1} are exhaustive (the violation is
    piecewise convex in (z1, z2) with kinks only on the diagonal), and
    ``samples`` random pairs are added on top. Table branches are checked on
    every quadruple.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    gamma = ifs.gamma if gamma is None else float(gamma)
    nx = ifs.base.size
    dx = ifs.base.metric
    if ifs.fiber.is_grid:
        rng = np.random.default_rng(seed)
        corner = np.array([0.0, 1.0])
        i1, i2, z1, z2 = np.meshgrid(np.arange(nx), np.arange(nx), corner, corner, indexing="ij")
        i1, i2, z1, z2 = (a.ravel() for a in (i1, i2, z1, z2))
        r1 = rng.integers(0, nx, samples)
        r2 = rng.integers(0, nx, samples)
        s1, s2 = rng.random(samples), rng.random(samples)
        i1, i2 = np.concatenate([i1, r1]), np.concatenate([i2, r2])
        z1, z2 = np.concatenate([z1, s1]), np.concatenate([z2, s2])
        a, b = ifs.affine[:, 0], ifs.affine[:, 1]
        d_out = np.abs(a[i1] * z1 + b[i1] - a[i2] * z2 - b[i2])
        d_in = dx[i1, i2] + np.abs(z1 - z2)
        pts = lambda k: (ifs.base.points[i1[k]], float(z1[k]), ifs.base.points[i2[k]], float(z2[k]))
    else:
        dz = ifs.fiber.metric
        nz = ifs.fiber.size
        i1, i2, j1, j2 = (a.ravel() for a in np.meshgrid(
            np.arange(nx), np.arange(nx), np.arange(nz), np.arange(nz), indexing="ij"))
        t = ifs.table
        d_out = dz[t[i1, j1], t[i2, j2]]
        d_in = dx[i1, i2] + dz[j1, j2]
        pts = lambda k: (ifs.base.points[i1[k]], ifs.fiber.points[j1[k]],
                         ifs.base.points[i2[k]], ifs.fiber.points[j2[k]])
    moving = d_in > 0
    ratios = np.zeros_like(d_out)
    ratios[moving] = d_out[moving] / d_in[moving]
    # coincident inputs must have coincident images
    ratios[~moving & (d_out > 0)] = np.inf
    k = int(np.argmax(ratios))
    worst = float(ratios[k])
    violated = (d_out > gamma * d_in + 1e-12)
    passed = not bool(np.any(violated))
    report = ContractionReport(worst, gamma, passed, int(d_out.size), None if passed else pts(k))
    if not passed and raise_on_fail:
        raise ContractionError(
            f"contraction violated: ratio {worst:.6g} > gamma {gamma}", witness=pts(k),
            ratio=worst, report=report)
    return report


def default_max_iter(tol: float, gamma: float) -> int:
    return 10 * math.ceil(math.log(tol) / math.log(gamma))
