"""Naive ground-truth computations.

Nothing here imports the transfer, thermo or duality modules: each oracle
uses enumeration, direct sums, dense linear algebra or Monte Carlo so that
it shares no numerical kernel with the solvers it checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleScaleError, ShapeError, SupportError
from .spaces import ContractiveIFS

MAX_TRANSPORT_CELLS = 16


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str
    cost: int

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "cost": self.cost}


def singleton_pressure(c, alpha) -> OracleResult:
    """log sum_i e^{c(i)} p_i for a one-point fiber."""
    c = np.asarray(c, dtype=float).ravel()
    p = np.asarray(alpha, dtype=float).ravel()
    if c.shape != p.shape:
        raise ShapeError("cost and alpha sizes differ")
    total = math.fsum(math.exp(ci) * pi for ci, pi in zip(c, p))
    return OracleResult(math.log(total), "direct sum", c.size)


def kl_divergence(q, p) -> float:
    """sum_i q_i log(q_i / p_i) with 0 log 0 = 0."""
    q = np.asarray(q, dtype=float).ravel()
    p = np.asarray(p, dtype=float).ravel()
    if q.shape != p.shape:
        raise ShapeError("q and p sizes differ")
    if np.any((q > 0) & (p <= 0)):
        raise SupportError("q charges a point where p vanishes")
    return math.fsum(qi * math.log(qi / pi) for qi, pi in zip(q, p) if qi > 0)


def conditional_kl_entropy(weights, alpha) -> float:
    """-sum_z pi_Z(z) KL(pi(.|z) || alpha), the closed-form entropy of a plan.

    The normalization constraint sum_x alpha(x) e^{c(x,z)} = 1 acts node by
    node, so the supremum defining the entropy splits over fiber nodes.
    """
    w = np.asarray(weights, dtype=float)
    a = np.asarray(alpha, dtype=float).ravel()
    if w.ndim == 1:
        w = w[:, None]
    total = []
    for j in range(w.shape[1]):
        mass = math.fsum(w[:, j])
        if mass > 0:
            total.append(mass * kl_divergence(w[:, j] / mass, a))
    return -math.fsum(total)


@dataclass(frozen=True)
class MomentEstimate:
    moments: tuple
    stderr: tuple
    samples: int
    burn_in: int

    def to_dict(self) -> dict:
        return {"moments": list(self.moments), "stderr": list(self.stderr),
                "samples": self.samples, "burn_in": self.burn_in}


def chaos_game_measure(cbar, alpha, ifs: ContractiveIFS, samples: int = 100_000,
                       burn_in: int = 64, seed: int = 0) -> MomentEstimate:
    """Monte Carlo moments of the dual fixed measure of a normalized cost.

    Runs ``samples`` independent chains z <- tau_x(z), the branch drawn with
    probability alpha(x) e^{cbar(x, z)} evaluated off-grid by interpolation,
    and reports the first two moments of the final positions.
    """
    if not ifs.fiber.is_grid:
        raise ValueError("chaos game needs a grid fiber")
    cb = np.asarray(cbar, dtype=float).reshape(ifs.shape)
    a = np.asarray(alpha, dtype=float).ravel()
    nodes = ifs.fiber.nodes
    rng = np.random.default_rng(seed)
    z = rng.random(samples)
    slope, offset = ifs.affine[:, 0], ifs.affine[:, 1]
    for _ in range(burn_in):
        probs = np.array([a[x] * np.exp(np.interp(z, nodes, cb[x])) for x in range(a.size)])
        cum = np.cumsum(probs / probs.sum(axis=0), axis=0)
        x = (rng.random(samples)[None, :] > cum).sum(axis=0)
        x = np.minimum(x, a.size - 1)
        z = slope[x] * z + offset[x]
    m = tuple(float(np.mean(z ** k)) for k in (1, 2))
    se = tuple(float(np.std(z ** k, ddof=1) / math.sqrt(samples)) for k in (1, 2))
    return MomentEstimate(m, se, samples, burn_in)


def transport_bruteforce(c, mu, nu) -> OracleResult:
    """max sum c(i,j) pi(i,j) over couplings of mu and nu, by vertex enumeration.

    Vertices of the transport polytope are supported on spanning trees of
    the bipartite cell graph, so every (m+n-1)-subset of cells with a
    uniquely solvable, nonnegative marginal system is tried.
    """
    c = np.asarray(c, dtype=float)
    mu = np.asarray(mu, dtype=float).ravel()
    nu = np.asarray(nu, dtype=float).ravel()
    m, n = c.shape
    if (m, n) != (mu.size, nu.size):
        raise ShapeError("cost shape does not match the marginals")
    if m * n > MAX_TRANSPORT_CELLS:
        raise OracleScaleError(f"{m}x{n} exceeds the {MAX_TRANSPORT_CELLS}-cell enumeration cap")
    A = np.zeros((m + n, m * n))
    for i in range(m):
        for j in range(n):
            A[i, i * n + j] = 1.0
            A[m + j, i * n + j] = 1.0
    rhs = np.concatenate([mu, nu])
    k = m + n - 1
    best, tried = -np.inf, 0
    for cells in itertools.combinations(range(m * n), k):
        sub = A[:, cells]
        tried += 1
        # the last marginal row is implied by the others
        square = sub[:-1]
        if np.linalg.matrix_rank(square) < k:
            continue
        x = np.linalg.solve(square, rhs[:-1])
        if np.max(np.abs(sub @ x - rhs)) > 1e-10 or np.min(x) < -1e-12:
            continue
        best = max(best, float(np.dot(c.ravel()[list(cells)], x)))
    return OracleResult(best, "transport polytope vertex enumeration", tried)


def dense_transfer_matrix(c, alpha, ifs: ContractiveIFS) -> np.ndarray:
    """The discretized transfer operator as an explicit nz x nz matrix."""
    c = np.asarray(c, dtype=float).reshape(ifs.shape)
    a = np.asarray(alpha, dtype=float).ravel()
    nx, nz = ifs.shape
    K = np.zeros((nz, nz))
    for x in range(nx):
        for j in range(nz):
            wt = a[x] * math.exp(c[x, j])
            K[j, ifs.lo[x, j]] += wt * (1.0 - ifs.w[x, j])
            K[j, ifs.hi[x, j]] += wt * ifs.w[x, j]
    return K


def dense_pressure(c, alpha, ifs: ContractiveIFS) -> float:
    """log of the Perron root of the dense transfer matrix."""
    if ifs.fiber.size == 1:
        return singleton_pressure(np.asarray(c).ravel(), alpha).value
    eig = np.linalg.eigvals(dense_transfer_matrix(c, alpha, ifs))
    return float(math.log(np.max(eig.real)))


def fd_pressure_gradient(c, alpha, ifs: ContractiveIFS, g, epsilon: float = 1e-4) -> float:
    """(P(c + eps g) - P(c - eps g)) / (2 eps) with dense eigenvalues."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = np.asarray(c, dtype=float).reshape(ifs.shape)
    g = np.asarray(g, dtype=float)
    if g.ndim == 1 and g.size == ifs.base.size:
        g = np.repeat(g[:, None], ifs.fiber.size, axis=1)
    g = g.reshape(ifs.shape)
    up = dense_pressure(c + epsilon * g, alpha, ifs)
    down = dense_pressure(c - epsilon * g, alpha, ifs)
    return (up - down) / (2.0 * epsilon)
