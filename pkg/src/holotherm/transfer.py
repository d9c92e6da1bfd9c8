"""Transfer operator, its leading eigenpair and the associated equilibrium.

For a cost ``c`` on X x Z and an a priori measure ``alpha`` on X the operator
acts on fiber functions by

    (L psi)(z) = sum_x alpha(x) exp(c(x, z)) psi(tau_x(z)),

with ``psi(tau_x(z))`` read off the grid by linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, HolonomyError, NotNormalizedError, ShapeError
from .spaces import (
    ContractiveIFS,
    GridFunction,
    ProbMeasure,
    as_measure,
    default_max_iter,
)

NORMALIZED_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CostFunction:
    """Cost values on base points x fiber nodes; ``lip`` is taken in z."""

    values: np.ndarray
    lip: float

    @classmethod
    def on(cls, ifs: ContractiveIFS, values) -> "CostFunction":
        v = np.asarray(values, dtype=float)
        if v.ndim == 1 and v.size == ifs.base.size:
            v = np.repeat(v[:, None], ifs.fiber.size, axis=1)
        if v.shape != ifs.shape:
            raise ShapeError(f"cost has shape {v.shape}, expected {ifs.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("cost values must be finite")
        return cls(v, ifs.fiber.lipschitz(v))


def as_cost(c, ifs: ContractiveIFS) -> CostFunction:
    if isinstance(c, NormalizedCost):
        c = c.values
    if isinstance(c, CostFunction):
        if c.values.shape != ifs.shape:
            raise ShapeError(f"cost has shape {c.values.shape}, expected {ifs.shape}")
        return c
    return CostFunction.on(ifs, c)


def _alpha(alpha, ifs: ContractiveIFS) -> np.ndarray:
    return as_measure(alpha, ifs.base.size, "alpha").require_full_support("alpha").weights


def _values(psi, ifs: ContractiveIFS) -> np.ndarray:
    v = psi.values if isinstance(psi, GridFunction) else np.asarray(psi, dtype=float)
    if v.shape != (ifs.fiber.size,):
        raise ShapeError(f"fiber function has shape {v.shape}, expected ({ifs.fiber.size},)")
    return v


def apply_transfer(c, alpha, psi, ifs: ContractiveIFS) -> GridFunction:
    """One application of L_{c,alpha} to ``psi``.

    The recorded Lipschitz constant is the one-step bound
    lip(e^c) sup|psi| + sup(L 1) gamma lip(psi).
    """
    cost = as_cost(c, ifs)
    a = _alpha(alpha, ifs)
    psi_v = _values(psi, ifs)
    psi_lip = psi.lip if isinstance(psi, GridFunction) else ifs.fiber.lipschitz(psi_v)
    ec = a[:, None] * np.exp(cost.values)
    out = (ec * ifs.compose(psi_v)).sum(axis=0)
    bound = (ifs.fiber.lipschitz(np.exp(cost.values)) * np.max(np.abs(psi_v))
             + ec.sum(axis=0).max() * ifs.gamma * psi_lip)
    return GridFunction(out, ifs.fiber, max(bound, ifs.fiber.lipschitz(out)))


def apply_hat(c, alpha, g, ifs: ContractiveIFS) -> GridFunction:
    """Average of g(x, z) against alpha with weight e^{c(x,z)}; no branch map."""
    cost = as_cost(c, ifs)
    a = _alpha(alpha, ifs)
    g = np.asarray(g, dtype=float)
    if g.ndim == 1 and g.size == ifs.base.size:
        g = np.repeat(g[:, None], ifs.fiber.size, axis=1)
    if g.shape != ifs.shape:
        raise ShapeError(f"g has shape {g.shape}, expected {ifs.shape}")
    return GridFunction((a[:, None] * np.exp(cost.values) * g).sum(axis=0), ifs.fiber)


@dataclass(frozen=True, eq=False)
class Eigenpair:
    """Leading eigenpair of L_c with the gauge max h = 1.

    ``residual`` is sup|L h - lambda h| / lambda.
    """

    log_lambda: float
    h: GridFunction
    residual: float
    iterations: int

    @property
    def lam(self) -> float:
        return float(np.exp(self.log_lambda))

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "log_lambda": self.log_lambda,
            "residual": self.residual,
            "iterations": self.iterations,
            "h": self.h.values.tolist(),
        }


def power_eigenpair(c, alpha, ifs: ContractiveIFS, tol: float = 1e-10,
                    max_iter: int | None = None, h0=None) -> Eigenpair:
    """Power iteration psi <- L psi / max(L psi) started from psi = 1.

    The exponential weights are shifted by max(c) so that nothing overflows;
    the shift is added back to log(lambda).
    """
    cost = as_cost(c, ifs)
    a = _alpha(alpha, ifs)
    if max_iter is None:
        max_iter = default_max_iter(tol, ifs.gamma)
    shift = float(cost.values.max())
    kern = a[:, None] * np.exp(cost.values - shift)
    psi = np.ones(ifs.fiber.size) if h0 is None else np.asarray(_values(h0, ifs), dtype=float)
    psi = psi / psi.max()
    res = np.inf
    for it in range(1, max_iter + 1):
        k = (kern * ifs.compose(psi)).sum(axis=0)
        lam = k.max()
        res = float(np.max(np.abs(k - lam * psi)) / lam)
        if res < tol:
            break
        psi = k / lam
    else:
        raise ConvergenceError(
            f"power iteration did not reach tol={tol} in {max_iter} steps (residual {res:.3g})",
            last_residual=res, iterations=max_iter)
    return Eigenpair(float(np.log(lam) + shift), GridFunction(psi, ifs.fiber), res, it)


def _lse(a: np.ndarray) -> np.ndarray:
    m = a.max(axis=0)
    return m + np.log(np.exp(a - m).sum(axis=0))


def bousch_fixpoint(c, alpha, ifs: ContractiveIFS, s: float, tol: float = 1e-10,
                    max_iter: int | None = None, u0=None) -> GridFunction:
    """Fixed point u_s of T_s(u) = log sum_x alpha(x) exp(c + s u o tau_x).

    Iterates the gauge-fixed map v <- T_s(v) - max T_s(v), which has the same
    fixed point up to the constant max(T_s v) / (1 - s) and whose span
    contracts at least at rate s. The stopping rule sup|T_s u - u| < tol
    bounds the error of u by tol / (1 - s).
    """
    if not 0.0 < s < 1.0:
        raise ValueError("discount s must lie in (0, 1)")
    cost = as_cost(c, ifs)
    a = _alpha(alpha, ifs)
    base = np.log(a)[:, None] + cost.values
    if max_iter is None:
        max_iter = 20 * int(np.ceil(np.log(tol) / np.log(s)))
    v = np.zeros(ifs.fiber.size) if u0 is None else _values(u0, ifs) - np.max(_values(u0, ifs))
    for _ in range(max_iter):
        t = _lse(base + s * ifs.compose(v))
        m = t.max()
        r = t - m - v
        v = t - m
        if np.max(np.abs(r)) < tol:
            break
    else:
        raise ConvergenceError("T_s iteration stalled", last_residual=float(np.max(np.abs(r))))
    return GridFunction(v + m / (1.0 - s), ifs.fiber)


def bousch_limit(c, alpha, ifs: ContractiveIFS, s_values=(0.9, 0.99, 0.999),
                 tol: float = 1e-11) -> dict:
    """(1 - s) max u_s over an s-sweep plus its polynomial extrapolation to s = 1."""
    s_values = np.asarray(s_values, dtype=float)
    scaled, lips, u = [], [], None
    for s in s_values:
        u = bousch_fixpoint(c, alpha, ifs, s, tol=tol, u0=u)
        scaled.append((1.0 - s) * float(np.max(u.values)))
        lips.append(u.lip)
    eps = 1.0 - s_values
    coef = np.polyfit(eps, scaled, len(eps) - 1)
    return {
        "s": s_values.tolist(),
        "scaled_max": scaled,
        "lip": lips,
        "extrapolated": float(np.polyval(coef, 0.0)),
    }


@dataclass(frozen=True, eq=False)
class NormalizedCost:
    """c + log h(tau_x z) - log h(z) - log lambda, with its provenance."""

    values: np.ndarray
    original: CostFunction
    eigen: Eigenpair

    @property
    def log_lambda(self) -> float:
        return self.eigen.log_lambda


def normalize_cost(c, alpha, ifs: ContractiveIFS, tol: float = 1e-10,
                   max_iter: int | None = None, h0=None) -> NormalizedCost:
    cost = as_cost(c, ifs)
    eig = power_eigenpair(cost, alpha, ifs, tol=tol, max_iter=max_iter, h0=h0)
    h = eig.h.values
    # dividing by the computed L h (= lambda h up to the eigen residual) makes
    # L_cbar 1 = 1 hold to rounding instead of to the residual
    log_hc = cost.values + np.log(ifs.compose(h))
    m = log_hc.max(axis=0)
    log_lh = m + np.log((_alpha(alpha, ifs)[:, None] * np.exp(log_hc - m)).sum(axis=0))
    return NormalizedCost(log_hc - log_lh[None, :], cost, eig)


def normalization_defect(c, alpha, ifs: ContractiveIFS) -> float:
    """sup_z |L_c 1 (z) - 1|."""
    a = _alpha(alpha, ifs)
    vals = c.values if isinstance(c, (NormalizedCost, CostFunction)) else np.asarray(c, dtype=float)
    return float(np.max(np.abs((a[:, None] * np.exp(vals)).sum(axis=0) - 1.0)))


def _normalized_kernel(cbar, alpha, ifs: ContractiveIFS) -> np.ndarray:
    vals = cbar.values if isinstance(cbar, (NormalizedCost, CostFunction)) else np.asarray(cbar, dtype=float)
    if vals.shape != ifs.shape:
        raise ShapeError(f"cost has shape {vals.shape}, expected {ifs.shape}")
    kern = _alpha(alpha, ifs)[:, None] * np.exp(vals)
    defect = float(np.max(np.abs(kern.sum(axis=0) - 1.0)))
    if defect > NORMALIZED_TOL:
        raise NotNormalizedError(f"cost is not normalized: sup|L1 - 1| = {defect:.3g}")
    return kern


def invariant_measure(cbar, alpha, ifs: ContractiveIFS, tol: float = 1e-10,
                      max_iter: int | None = None, rho0=None) -> ProbMeasure:
    """Fixed probability of the dual operator of a normalized cost.

    Iterates rho <- sum_x (tau_x)_* (alpha(x) e^{cbar(x, .)} rho) until the
    total-variation change drops below ``tol``.
    """
    kern = _normalized_kernel(cbar, alpha, ifs)
    if max_iter is None:
        max_iter = default_max_iter(tol, ifs.gamma)
    n = ifs.fiber.size
    rho = np.full(n, 1.0 / n) if rho0 is None else as_measure(rho0, n).weights.copy()
    tv = np.inf
    for _ in range(max_iter):
        new = ifs.push(kern * rho[None, :])
        new /= new.sum()
        tv = 0.5 * float(np.abs(new - rho).sum())
        rho = new
        if tv < tol:
            break
    else:
        raise ConvergenceError(
            f"dual iteration did not reach TV tol={tol} in {max_iter} steps (last {tv:.3g})",
            last_residual=tv, iterations=max_iter)
    return ProbMeasure(rho)


def transfer_orbit(c, alpha, ifs: ContractiveIFS, u, n: int) -> np.ndarray:
    """Rows L^0 u, L^1 u, ..., L^n u."""
    cost = as_cost(c, ifs)
    kern = _alpha(alpha, ifs)[:, None] * np.exp(cost.values)
    rows = [_values(u, ifs).astype(float)]
    for _ in range(n):
        rows.append((kern * ifs.compose(rows[-1])).sum(axis=0))
    return np.array(rows)


def _test_functions(ifs: ContractiveIFS, count: int) -> np.ndarray:
    if not ifs.fiber.is_grid:
        return np.eye(ifs.fiber.size)
    z = ifs.fiber.nodes
    out = []
    for i in range(count):
        k = i // 2 + 1
        out.append(z ** k if i % 2 == 0 else np.cos(np.pi * k * z))
    return np.array(out)


def holonomy_residual(pi, ifs: ContractiveIFS, test_functions: int = 10) -> float:
    """max_g |int g(tau_x z) dpi - int g(z) dpi| over a fixed basis.

    Grid fibers use z, cos(pi z), z^2, cos(2 pi z), ...; finite fibers use
    every point indicator, which makes the check exact.
    """
    w = pi.weights if isinstance(pi, HolonomicPlan) else np.asarray(pi, dtype=float)
    if w.shape != ifs.shape:
        raise ShapeError(f"plan has shape {w.shape}, expected {ifs.shape}")
    pushed = ifs.push(w)
    zmarg = w.sum(axis=0)
    g = _test_functions(ifs, test_functions)
    return float(np.max(np.abs(g @ pushed - g @ zmarg)))


@dataclass(frozen=True, eq=False)
class HolonomicPlan:
    """Joint weights on X x Z; ``cost`` is the generating normalized cost, if any."""

    weights: np.ndarray
    holonomy_residual: float
    cost: np.ndarray | None = None

    @property
    def x_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def z_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=0)

    def integrate(self, f) -> float:
        f = np.asarray(f, dtype=float)
        if f.ndim == 1 and f.size == self.weights.shape[0]:
            return float(np.dot(self.x_marginal, f))
        return float(np.sum(self.weights * f))

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "holonomy_residual": self.holonomy_residual,
            "x_marginal": self.x_marginal.tolist(),
        }


def plan_from_weights(weights, ifs: ContractiveIFS, cost=None) -> HolonomicPlan:
    w = np.asarray(weights, dtype=float)
    if w.ndim == 1 and w.size == ifs.base.size and ifs.fiber.size == 1:
        w = w[:, None]
    if w.shape != ifs.shape:
        raise ShapeError(f"plan has shape {w.shape}, expected {ifs.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("plan weights must be a probability")
    return HolonomicPlan(w, holonomy_residual(w, ifs), cost)


def holonomic_plan(cbar, alpha, rho, ifs: ContractiveIFS, tol: float = 1e-8) -> HolonomicPlan:
    """pi(x, z) = alpha(x) e^{cbar(x, z)} rho(z)."""
    kern = _normalized_kernel(cbar, alpha, ifs)
    r = as_measure(rho, ifs.fiber.size, "rho").weights
    w = kern * r[None, :]
    w /= w.sum()
    res = holonomy_residual(w, ifs)
    if res > tol:
        raise HolonomyError(f"plan holonomy residual {res:.3g} exceeds {tol}")
    vals = cbar.values if isinstance(cbar, (NormalizedCost, CostFunction)) else np.asarray(cbar, dtype=float)
    return HolonomicPlan(w, res, np.array(vals, dtype=float))


@dataclass(frozen=True)
class AttractorCover:
    """Closed intervals covering the attractor after ``depth`` refinements.

    Finite fibers carry the reachable point indices in ``points`` instead.
    """

    intervals: tuple
    depth: int
    points: frozenset | None = None

    def contains(self, z, eps: float = 1e-12) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        inside = np.zeros(z.shape, dtype=bool)
        for lo, hi in self.intervals:
            inside |= (z >= lo - eps) & (z <= hi + eps)
        return inside

    def total_length(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def is_inside(self, other: "AttractorCover", eps: float = 1e-12) -> bool:
        """Whether every interval of self lies within some interval of other."""
        if self.points is not None:
            return self.points <= other.points
        return all(any(lo >= a - eps and hi <= b + eps for a, b in other.intervals)
                   for lo, hi in self.intervals)

    def mass_outside(self, measure, nodes) -> float:
        w = as_measure(measure).weights
        if self.points is not None:
            keep = np.isin(np.arange(w.size), sorted(self.points))
            return float(w[~keep].sum())
        return float(w[~self.contains(nodes)].sum())


def _merge(intervals, eps: float = 1e-15):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1] + eps:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def attractor_cover(ifs: ContractiveIFS, depth: int) -> AttractorCover:
    """Apply C <- union_x tau_x(C) ``depth`` times, starting from the whole fiber."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if not ifs.fiber.is_grid:
        pts = set(range(ifs.fiber.size))
        for _ in range(depth):
            pts = {int(ifs.table[x, j]) for x in range(ifs.base.size) for j in pts}
        return AttractorCover((), depth, frozenset(pts))
    cover = [(0.0, 1.0)]
    for _ in range(depth):
        images = []
        for a, b in ifs.affine:
            for lo, hi in cover:
                p, q = a * lo + b, a * hi + b
                images.append((min(p, q), max(p, q)))
        cover = _merge(images)
    return AttractorCover(tuple(cover), depth)
