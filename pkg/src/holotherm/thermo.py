"""Entropy of holonomic plans, pressure of costs and the variational principle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingCertificateError, ShapeError
from .spaces import ContractiveIFS, ProbMeasure, as_measure
from .systems import random_lipschitz_cost
from .transfer import (
    Eigenpair,
    HolonomicPlan,
    NormalizedCost,
    as_cost,
    holonomic_plan,
    holonomy_residual,
    invariant_measure,
    normalize_cost,
)

__all__ = [
    "Equilibrium",
    "EntropyReport",
    "PressureReport",
    "equilibrium",
    "pressure",
    "entropy_equilibrium",
    "entropy_variational",
    "holonomy_residual",
    "pressure_gradient",
]


@dataclass(frozen=True, eq=False)
class Equilibrium:
    eigen: Eigenpair
    normalized: NormalizedCost
    rho: ProbMeasure
    plan: HolonomicPlan

    @property
    def log_lambda(self) -> float:
        return self.eigen.log_lambda


def equilibrium(c, alpha, ifs: ContractiveIFS, tol: float = 1e-10,
                max_iter: int | None = None, warm: Equilibrium | None = None) -> Equilibrium:
    """Eigenpair, normalized cost, dual fixed point and holonomic plan of ``c``.

    ``warm`` seeds both iterations with a previous solution.
    """
    h0 = rho0 = None
    if warm is not None:
        h0, rho0 = warm.eigen.h, warm.rho
    nc = normalize_cost(c, alpha, ifs, tol=tol, max_iter=max_iter, h0=h0)
    rho = invariant_measure(nc, alpha, ifs, tol=tol, max_iter=max_iter, rho0=rho0)
    plan = holonomic_plan(nc, alpha, rho, ifs)
    return Equilibrium(nc.eigen, nc, rho, plan)


@dataclass(frozen=True, eq=False)
class EntropyReport:
    H: float
    method: str
    certificate: np.ndarray | None = None
    candidates: int = 0

    @property
    def I(self) -> float:
        return -self.H

    def to_dict(self) -> dict:
        out = {"H": self.H, "I": self.I, "method": self.method, "candidates": self.candidates}
        if self.certificate is not None:
            out["certificate"] = np.asarray(self.certificate).tolist()
        return out


@dataclass(frozen=True, eq=False)
class PressureReport:
    P: float
    equilibrium: Equilibrium
    entropy: float
    gap: float

    @property
    def lam(self) -> float:
        return float(np.exp(self.P))

    def to_dict(self) -> dict:
        return {
            "P": self.P,
            "lambda": self.lam,
            "log_lambda": self.P,
            "entropy": self.entropy,
            "gap": self.gap,
            "eigen_residual": self.equilibrium.eigen.residual,
            "iterations": self.equilibrium.eigen.iterations,
            "holonomy_residual": self.equilibrium.plan.holonomy_residual,
            "h": self.equilibrium.eigen.h.values.tolist(),
            "rho": self.equilibrium.rho.weights.tolist(),
        }


def entropy_equilibrium(pi: HolonomicPlan) -> EntropyReport:
    """H = -int cbar dpi for the plan generated by the normalized ``cbar``."""
    if getattr(pi, "cost", None) is None:
        raise MissingCertificateError(
            "plan carries no generating normalized cost; use entropy_variational")
    return EntropyReport(-float(np.sum(pi.weights * pi.cost)), "equilibrium-formula",
                         pi.cost, 1)


def pressure(c, alpha, ifs: ContractiveIFS, tol: float = 1e-10,
             max_iter: int | None = None) -> PressureReport:
    """P = log(lambda), checked against int c dpi + H(pi) at the equilibrium."""
    cost = as_cost(c, ifs)
    eq = equilibrium(cost, alpha, ifs, tol=tol, max_iter=max_iter)
    H = entropy_equilibrium(eq.plan).H
    value = float(np.sum(eq.plan.weights * cost.values)) + H
    return PressureReport(eq.log_lambda, eq, H, abs(eq.log_lambda - value))


def _pointwise_candidate(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    # log(pi(x|z) / alpha(x)), floored where pi(x|z) = 0, then renormalized per node
    zm = w.sum(axis=0)
    cond = np.where(zm > 0, w / np.where(zm > 0, zm, 1.0), a[:, None])
    cond = np.maximum(cond, 1e-300)
    c = np.log(cond) - np.log(a)[:, None]
    return c - np.log((a[:, None] * np.exp(c)).sum(axis=0))[None, :]


def entropy_variational(pi, alpha, ifs: ContractiveIFS, candidates: int = 32,
                        seed: int = 0, amplitude: float = 1.0) -> EntropyReport:
    """Upper bound on H (lower bound on I) from a pool of normalized costs.

    The pool holds c = 0, the plan's own certificate when present, the
    node-wise conditional density log(pi(x|z) / alpha(x)), and ``candidates``
    random Lipschitz costs passed through normalize_cost. The last
    deterministic member already attains the supremum on a finite fiber;
    the random draws are kept as an independent audit trail.
    """
    w = pi.weights if isinstance(pi, HolonomicPlan) else np.asarray(pi, dtype=float)
    if w.ndim == 1 and ifs.fiber.size == 1:
        w = w[:, None]
    if w.shape != ifs.shape:
        raise ShapeError(f"plan has shape {w.shape}, expected {ifs.shape}")
    a = as_measure(alpha, ifs.base.size, "alpha").require_full_support("alpha").weights
    pool = [np.zeros(ifs.shape), _pointwise_candidate(w, a)]
    if getattr(pi, "cost", None) is not None:
        pool.append(np.asarray(pi.cost, dtype=float))
    rng = np.random.default_rng(seed)
    for _ in range(candidates):
        c = random_lipschitz_cost(ifs, rng, amplitude=amplitude)
        pool.append(normalize_cost(c, a, ifs).values)
    scores = [float(np.sum(w * c)) for c in pool]
    best = int(np.argmax(scores))
    return EntropyReport(-scores[best], "variational-lower-bound", pool[best], len(pool))


def pressure_gradient(c, alpha, ifs: ContractiveIFS, g, tol: float = 1e-10) -> float:
    """Directional derivative of P at c along g, as int g dpi_eq."""
    g = as_cost(g, ifs).values
    eq = equilibrium(c, alpha, ifs, tol=tol)
    return float(np.sum(eq.plan.weights * g))
