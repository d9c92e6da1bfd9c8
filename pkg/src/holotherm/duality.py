"""Marginal problems: single- and two-marginal duality, marginal pressure,
the zero-temperature Kantorovich reduction and optimality certificates.

Costs on four spaces are arrays of shape (nx, ny, nz, nw). The equality
constraint P(c - phi) = 0 is always removed with the exact shift identity
P(c - phi - t) = P(c - phi) - t, so every dual is an unconstrained convex
minimization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConvergenceError, InfeasibleError, PressureNonzeroError, ShapeError
from .lp import simplex_max
from .spaces import ContractiveIFS, ProbMeasure, as_measure
from .systems import singleton_system
from .thermo import Equilibrium, entropy_variational, equilibrium
from .transfer import HolonomicPlan, as_cost, holonomy_residual, power_eigenpair


@dataclass(frozen=True, eq=False)
class DualPotentials:
    """Dual potentials normalized so that the pressure constraint reads 0."""

    phi: np.ndarray
    psi: np.ndarray | None
    objective: float
    pressure_residual: float
    primal: float = float("nan")
    gap: float = float("nan")
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "objective": self.objective,
            "primal": self.primal,
            "gap": self.gap,
            "pressure_residual": self.pressure_residual,
            "iterations": self.iterations,
            "phi": self.phi.tolist(),
            "psi": None if self.psi is None else self.psi.tolist(),
        }
        for k, v in self.extra.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


@dataclass(frozen=True, eq=False)
class SeparableBound:
    """c - level <= b + d with P_alpha(b) = P_beta(d) = 0."""

    b: np.ndarray
    d: np.ndarray
    level: float

    def to_dict(self) -> dict:
        return {"level": self.level, "b": self.b.tolist(), "d": self.d.tolist()}


@dataclass(frozen=True, eq=False)
class CoboundaryPair:
    g: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.g)) and np.all(np.isfinite(self.f))):
            raise ValueError("coboundary potentials must be finite")


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Weights on X x Y x Z x W with marginal and holonomy residuals."""

    weights: np.ndarray
    mu_residual: float
    nu_residual: float
    holonomy_x: float
    holonomy_y: float

    @property
    def xz(self) -> np.ndarray:
        return self.weights.sum(axis=(1, 3))

    @property
    def yw(self) -> np.ndarray:
        return self.weights.sum(axis=(0, 2))

    @property
    def xy(self) -> np.ndarray:
        return self.weights.sum(axis=(2, 3))

    @property
    def max_residual(self) -> float:
        return max(self.mu_residual, self.nu_residual, self.holonomy_x, self.holonomy_y)

    def to_dict(self) -> dict:
        return {
            "xy": self.xy.tolist(),
            "mu_residual": self.mu_residual,
            "nu_residual": self.nu_residual,
            "holonomy_x": self.holonomy_x,
            "holonomy_y": self.holonomy_y,
        }


def _tv(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def transport_plan(weights, mu, nu, ifs_x: ContractiveIFS, ifs_y: ContractiveIFS) -> TransportPlan:
    w = np.asarray(weights, dtype=float)
    return TransportPlan(
        w,
        _tv(w.sum(axis=(1, 2, 3)), mu),
        _tv(w.sum(axis=(0, 2, 3)), nu),
        holonomy_residual(w.sum(axis=(1, 3)), ifs_x),
        holonomy_residual(w.sum(axis=(0, 2)), ifs_y),
    )


def _trivial(n: int = 1) -> ContractiveIFS:
    return singleton_system(n)


def _cost4(c, ifs_x: ContractiveIFS, ifs_y: ContractiveIFS) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    shape = (ifs_x.base.size, ifs_y.base.size, ifs_x.fiber.size, ifs_y.fiber.size)
    if c.ndim == 2 and shape[2] == shape[3] == 1:
        c = c[:, :, None, None]
    if c.shape != shape:
        raise ShapeError(f"cost has shape {c.shape}, expected {shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost must be finite")
    return c


def product_plan(mu, nu, ifs_x: ContractiveIFS, ifs_y: ContractiveIFS) -> TransportPlan:
    """mu(x) nu(y) delta_{z_x} delta_{w_y}, z_x and w_y the branch fixed points."""
    mu = as_measure(mu, ifs_x.base.size, "mu").weights
    nu = as_measure(nu, ifs_y.base.size, "nu").weights
    zx = np.array([ifs_x.fixed_point_measure(x) for x in range(ifs_x.base.size)])
    wy = np.array([ifs_y.fixed_point_measure(y) for y in range(ifs_y.base.size)])
    w = (mu[:, None, None, None] * nu[None, :, None, None]
         * zx[:, None, :, None] * wy[None, :, None, :])
    return transport_plan(w, mu, nu, ifs_x, ifs_y)


# -- single marginal ---------------------------------------------------------


def _schedule(name: str, eta0: float):
    if name == "sqrt":
        return lambda k: eta0 / np.sqrt(k)
    if name == "constant":
        return lambda k: eta0
    raise ValueError(f"unknown step schedule {name!r}")


def single_marginal_dual(c, mu, alpha, ifs: ContractiveIFS, eta0: float = 1.0,
                         schedule: str = "sqrt", tol: float = 1e-6, max_iter: int = 5000,
                         inner_tol: float = 1e-11) -> tuple[DualPotentials, HolonomicPlan]:
    """Minimize <mu, phi> + P_alpha(c - phi) by gradient descent.

    The gradient is mu minus the x-marginal of the equilibrium of c - phi.
    Stops once that marginal is within ``tol`` of mu in total variation.
    The returned phi is shifted so that P_alpha(c - phi) = 0.
    """
    cost = as_cost(c, ifs).values
    mu = as_measure(mu, ifs.base.size, "mu").weights
    step = _schedule(schedule, eta0)
    phi = np.zeros(ifs.base.size)
    eq: Equilibrium | None = None
    tv = np.inf
    for k in range(1, max_iter + 1):
        eq = equilibrium(cost - phi[:, None], alpha, ifs, tol=inner_tol, warm=eq)
        grad = mu - eq.plan.x_marginal
        tv = 0.5 * float(np.abs(grad).sum())
        if tv < tol:
            break
        phi = phi - step(k) * grad
    else:
        raise ConvergenceError(
            f"single-marginal descent stopped at TV {tv:.3g} after {max_iter} steps",
            last_residual=tv, iterations=max_iter)
    phi = phi + eq.log_lambda
    check = power_eigenpair(cost - phi[:, None], alpha, ifs, tol=inner_tol, h0=eq.eigen.h)
    objective = float(mu @ phi)
    plan = eq.plan
    H = -float(np.sum(plan.weights * plan.cost))
    primal = float(np.sum(plan.weights * cost)) + H
    dual = DualPotentials(phi, None, objective, abs(check.log_lambda), primal,
                          objective - primal, k, {"marginal_tv": tv, "entropy": H})
    return dual, plan


@dataclass(frozen=True)
class SlacknessReport:
    pressure: float
    lhs: float
    rhs: float
    identity_residual: float
    marginal_tv: float
    optimal: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def slackness_check(c, phi, alpha, ifs: ContractiveIFS, tol: float = 1e-5, mu=None,
                    pressure_tol: float = 1e-8) -> SlacknessReport:
    """Check int phi dmu = int c dpi + H(pi) for pi the equilibrium of c - phi.

    Without ``mu`` the target marginal is the equilibrium's own x-marginal.
    """
    cost = as_cost(c, ifs).values
    phi = np.asarray(phi, dtype=float).ravel()
    eq = equilibrium(cost - phi[:, None], alpha, ifs)
    if abs(eq.log_lambda) > pressure_tol:
        raise PressureNonzeroError(f"P(c - phi) = {eq.log_lambda:.3g}, expected 0")
    marg = eq.plan.x_marginal
    target = marg if mu is None else as_measure(mu, ifs.base.size, "mu").weights
    H = -float(np.sum(eq.plan.weights * eq.plan.cost))
    rhs = float(np.sum(eq.plan.weights * cost)) + H
    lhs = float(target @ phi)
    res = abs(lhs - rhs)
    tv = _tv(marg, target)
    return SlacknessReport(eq.log_lambda, lhs, rhs, res, tv, res <= tol and tv <= tol)


# -- four-space problems -----------------------------------------------------


class _Joint:
    """Smoothed objective over (phi, psi, b, d) or (phi, psi, g, f).

    Entropic form:
        <mu,phi> + <nu,psi> + max(c - phi - psi - b - d) + P_alpha(b) + P_beta(d)
    Zero-temperature form:
        <mu,phi> + <nu,psi> + max(c - phi - psi + g o tau_x - g + f o tau_y - f)
    The max is replaced by tau * logsumexp(. / tau).
    """

    def __init__(self, c, alpha, beta, ifs_x, ifs_y, mu=None, nu=None, entropic=True):
        self.c = c
        self.alpha, self.beta = alpha, beta
        self.ifs_x, self.ifs_y = ifs_x, ifs_y
        self.mu, self.nu = mu, nu
        self.entropic = entropic
        nx, ny, nz, nw = c.shape
        sizes = []
        if mu is not None:
            sizes.append(("phi", (nx,)))
        if nu is not None:
            sizes.append(("psi", (ny,)))
        if entropic:
            sizes += [("b", (nx, nz)), ("d", (ny, nw))]
        else:
            sizes += [("g", (nz,)), ("f", (nw,))]
        self.layout = sizes
        self.size = sum(int(np.prod(s)) for _, s in sizes)
        self.eq_b: Equilibrium | None = None
        self.eq_d: Equilibrium | None = None
        self.evaluations = 0

    def unpack(self, theta) -> dict:
        out, k = {}, 0
        for name, shape in self.layout:
            n = int(np.prod(shape))
            out[name] = theta[k:k + n].reshape(shape)
            k += n
        return out

    def pack(self, parts: dict) -> np.ndarray:
        return np.concatenate([np.ravel(parts[name]) for name, _ in self.layout])

    def inner(self, p: dict) -> np.ndarray:
        u = self.c
        if "phi" in p:
            u = u - p["phi"][:, None, None, None]
        if "psi" in p:
            u = u - p["psi"][None, :, None, None]
        if self.entropic:
            u = u - p["b"][:, None, :, None] - p["d"][None, :, None, :]
        else:
            dg = self.ifs_x.compose(p["g"]) - p["g"][None, :]
            df = self.ifs_y.compose(p["f"]) - p["f"][None, :]
            u = u + dg[:, None, :, None] + df[None, :, None, :]
        return u

    def pressures(self, p: dict, tol=1e-11, max_iter=200_000):
        # large potentials slow the spectral gap; allow a generous cap
        self.eq_b = equilibrium(p["b"], self.alpha, self.ifs_x, tol=tol, max_iter=max_iter,
                                warm=self.eq_b)
        self.eq_d = equilibrium(p["d"], self.beta, self.ifs_y, tol=tol, max_iter=max_iter,
                                warm=self.eq_d)
        return self.eq_b, self.eq_d

    def linear(self, p: dict) -> float:
        val = 0.0
        if "phi" in p:
            val += float(self.mu @ p["phi"])
        if "psi" in p:
            val += float(self.nu @ p["psi"])
        return val

    def softmax(self, u: np.ndarray, tau: float):
        m = u.max()
        e = np.exp((u - m) / tau)
        s = e.sum()
        return m + tau * np.log(s), e / s

    def __call__(self, theta, tau):
        self.evaluations += 1
        p = self.unpack(theta)
        u = self.inner(p)
        lse, sigma = self.softmax(u, tau)
        val = lse + self.linear(p)
        grad = {}
        if "phi" in p:
            grad["phi"] = self.mu - sigma.sum(axis=(1, 2, 3))
        if "psi" in p:
            grad["psi"] = self.nu - sigma.sum(axis=(0, 2, 3))
        sxz, syw = sigma.sum(axis=(1, 3)), sigma.sum(axis=(0, 2))
        if self.entropic:
            eb, ed = self.pressures(p)
            val += eb.log_lambda + ed.log_lambda
            grad["b"] = eb.plan.weights - sxz
            grad["d"] = ed.plan.weights - syw
        else:
            grad["g"] = self.ifs_x.push(sxz) - sxz.sum(axis=0)
            grad["f"] = self.ifs_y.push(syw) - syw.sum(axis=0)
        return val, self.pack(grad)

    def exact(self, p: dict) -> float:
        """Unsmoothed objective, an upper bound on the smoothed minimum's target."""
        val = float(self.inner(p).max()) + self.linear(p)
        if self.entropic:
            eb, ed = self.pressures(p)
            val += eb.log_lambda + ed.log_lambda
        return val


def _anneal(obj: _Joint, theta, tau0: float, restarts: int, maxiter: int):
    sigma = None
    for r in range(restarts + 1):
        tau = tau0 * 0.5 ** r
        res = minimize(obj, theta, args=(tau,), jac=True, method="L-BFGS-B",
                       options={"maxiter": maxiter, "gtol": 1e-13, "ftol": 1e-16, "maxcor": 30})
        if not np.all(np.isfinite(res.x)):
            raise ConvergenceError("smoothed descent produced non-finite iterates")
        theta = res.x
    p = obj.unpack(theta)
    _, sigma = obj.softmax(obj.inner(p), tau0 * 0.5 ** restarts)
    return theta, sigma


def _default_tau(c) -> float:
    spread = float(np.ptp(c))
    return 1e-3 * spread if spread > 0 else 1e-3


@dataclass(frozen=True, eq=False)
class MarginalPressure:
    value: float
    bound: SeparableBound
    plan: np.ndarray
    evaluations: int

    def to_dict(self) -> dict:
        return {"value": self.value, "level": self.bound.level, "evaluations": self.evaluations}


def marginal_pressure(c, alpha, beta, ifs_x: ContractiveIFS, ifs_y: ContractiveIFS,
                      smoothing: float | None = None, restarts: int = 20,
                      maxiter: int = 2000) -> MarginalPressure:
    """inf over (b, d) of max(c - b - d) + P_alpha(b) + P_beta(d).

    The pointwise max is smoothed with a softmax whose temperature starts at
    ``smoothing`` (default 1e-3 * range(c)) and halves on each of the
    ``restarts`` warm-started rounds. The reported value is the unsmoothed
    objective at the final iterate, which is the level of a feasible
    SeparableBound.
    """
    c = _cost4(c, ifs_x, ifs_y)
    obj = _Joint(c, alpha, beta, ifs_x, ifs_y)
    tau0 = _default_tau(c) if smoothing is None else smoothing
    theta, sigma = _anneal(obj, np.zeros(obj.size), tau0, restarts, maxiter)
    p = obj.unpack(theta)
    value = obj.exact(p)
    eb, ed = obj.pressures(p)
    b = p["b"] - eb.log_lambda
    d = p["d"] - ed.log_lambda
    level = float((c - b[:, None, :, None] - d[None, :, None, :]).max())
    return MarginalPressure(value, SeparableBound(b, d, level), sigma, obj.evaluations)


def _plan_entropy(weights, alpha, ifs) -> float:
    return entropy_variational(weights, alpha, ifs, candidates=0).H


def two_marginal_dual(c, mu, nu, alpha, beta, ifs_x: ContractiveIFS, ifs_y: ContractiveIFS,
                      entropic: bool = True, smoothing: float | None = None,
                      restarts: int = 20, maxiter: int = 2000
                      ) -> tuple[DualPotentials, TransportPlan]:
    """Minimize <mu,phi> + <nu,psi> + P^m(c - phi - psi).

    The marginal pressure is expanded through its separable-bound
    representation, so (phi, psi, b, d) are optimized jointly. With
    ``entropic=False`` the entropy terms are dropped and coboundary
    potentials (g, f) take the place of (b, d): the zero-temperature problem.
    The witness plan is the softmax distribution at the final temperature.
    """
    c = _cost4(c, ifs_x, ifs_y)
    mu = as_measure(mu, ifs_x.base.size, "mu").weights
    nu = as_measure(nu, ifs_y.base.size, "nu").weights
    obj = _Joint(c, alpha, beta, ifs_x, ifs_y, mu=mu, nu=nu, entropic=entropic)
    tau0 = _default_tau(c) if smoothing is None else smoothing
    theta, sigma = _anneal(obj, np.zeros(obj.size), tau0, restarts, maxiter)
    p = obj.unpack(theta)
    objective = obj.exact(p)
    # absorb the pressure level into phi so that the constraint reads 0
    phi = p["phi"] + (objective - obj.linear(p))
    psi = p["psi"]
    plan = transport_plan(sigma, mu, nu, ifs_x, ifs_y)
    primal = float(np.sum(sigma * c))
    extra = {"evaluations": obj.evaluations}
    if entropic:
        Ha = _plan_entropy(plan.xz, alpha, ifs_x)
        Hb = _plan_entropy(plan.yw, beta, ifs_y)
        primal += Ha + Hb
        extra.update(entropy_alpha=Ha, entropy_beta=Hb)
    else:
        extra.update(g=p["g"], f=p["f"])
    # P^m(c - phi - psi) <= 0 by construction; the witness gives the lower side
    lower = primal - float(mu @ phi) - float(nu @ psi)
    dual = DualPotentials(phi, psi, objective, abs(lower), primal, objective - primal,
                          obj.evaluations, extra)
    return dual, plan


# -- zero temperature, exact -------------------------------------------------


def _composition_matrix(ifs: ContractiveIFS) -> np.ndarray:
    """M[x, z, k]: weight of node k in the interpolated image tau_x(z)."""
    nx, nz = ifs.shape
    M = np.zeros((nx, nz, nz))
    xi, zi = np.meshgrid(np.arange(nx), np.arange(nz), indexing="ij")
    np.add.at(M, (xi, zi, ifs.lo), 1.0 - ifs.w)
    np.add.at(M, (xi, zi, ifs.hi), ifs.w)
    return M


def kantorovich_solve(c, mu, nu, ifs_x: ContractiveIFS | None = None,
                      ifs_y: ContractiveIFS | None = None
                      ) -> tuple[TransportPlan, DualPotentials]:
    """Exact max of int c dpi over Pi(mu, nu, tau) by dense simplex.

    With one-point fibers (the default) this is the discrete transport
    problem and (phi, psi) are its optimal potentials. Larger fibers add the
    two holonomy constraint blocks, whose duals are returned as (g, f) with
    c + g o tau_x - g + f o tau_y - f <= phi + psi.
    """
    c = np.asarray(c, dtype=float)
    mu_w = np.asarray(mu, dtype=float).ravel()
    nu_w = np.asarray(nu, dtype=float).ravel()
    if abs(mu_w.sum() - nu_w.sum()) > 1e-12:
        raise InfeasibleError(f"marginal masses differ: {mu_w.sum()} vs {nu_w.sum()}")
    if ifs_x is None:
        ifs_x = _trivial(mu_w.size)
    if ifs_y is None:
        ifs_y = _trivial(nu_w.size)
    mu_w = as_measure(mu_w, ifs_x.base.size, "mu").weights
    nu_w = as_measure(nu_w, ifs_y.base.size, "nu").weights
    c = _cost4(c, ifs_x, ifs_y)
    nx, ny, nz, nw = c.shape
    N = c.size
    idx = np.arange(N).reshape(c.shape)
    rows = []
    for x in range(nx):
        r = np.zeros(N)
        r[idx[x].ravel()] = 1.0
        rows.append(r)
    for y in range(ny):
        r = np.zeros(N)
        r[idx[:, y].ravel()] = 1.0
        rows.append(r)
    Mx, My = _composition_matrix(ifs_x), _composition_matrix(ifs_y)
    hz = hw = 0
    if nz > 1:
        # sum pi(x,y,z,w) [M_x(z,k) - delta(z,k)] = 0 for every node k
        blk = (Mx - np.eye(nz)[None])[:, None, :, None, :] * np.ones((1, ny, 1, nw, 1))
        rows.extend(blk.reshape(N, nz).T)
        hz = nz
    if nw > 1:
        blk = (My - np.eye(nw)[None])[None, :, None, :, :] * np.ones((nx, 1, nz, 1, 1))
        rows.extend(blk.reshape(N, nw).T)
        hw = nw
    A = np.array(rows)
    b = np.concatenate([mu_w, nu_w, np.zeros(hz + hw)])
    res = simplex_max(c.ravel(), A, b)
    w = np.clip(res.x.reshape(c.shape), 0.0, None)
    y = res.y
    phi, psi = y[:nx], y[nx:nx + ny]
    g = -y[nx + ny:nx + ny + hz] if hz else np.zeros(nz)
    f = -y[nx + ny + hz:] if hw else np.zeros(nw)
    dual_value = float(mu_w @ phi + nu_w @ psi)
    plan = transport_plan(w, mu_w, nu_w, ifs_x, ifs_y)
    worst = coboundary_feasibility(c, phi, psi, g, f, ifs_x=ifs_x, ifs_y=ifs_y)[1]
    dual = DualPotentials(phi, psi, dual_value, worst, res.value, dual_value - res.value,
                          res.iterations, {"g": g, "f": f})
    return plan, dual


def coboundary_feasibility(c, phi, psi, g=None, f=None, b=None, d=None,
                           ifs_x: ContractiveIFS | None = None,
                           ifs_y: ContractiveIFS | None = None,
                           tol: float = 1e-9) -> tuple[bool, float]:
    """Worst violation of c - phi - psi + g o tau_x - g + f o tau_y - f <= b + d."""
    c = np.asarray(c, dtype=float)
    if c.ndim == 2:
        c = c[:, :, None, None]
    nx, ny, nz, nw = c.shape
    ifs_x = ifs_x or _trivial(nx)
    ifs_y = ifs_y or _trivial(ny)
    c = _cost4(c, ifs_x, ifs_y)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), (nx,))
    psi = np.broadcast_to(np.asarray(psi, dtype=float), (ny,))
    u = c - phi[:, None, None, None] - psi[None, :, None, None]
    if g is not None:
        g = np.asarray(g, dtype=float)
        u = u + (ifs_x.compose(g) - g[None, :])[:, None, :, None]
    if f is not None:
        f = np.asarray(f, dtype=float)
        u = u + (ifs_y.compose(f) - f[None, :])[None, :, None, :]
    if b is not None:
        u = u - np.asarray(b, dtype=float).reshape(nx, nz)[:, None, :, None]
    if d is not None:
        u = u - np.asarray(d, dtype=float).reshape(ny, nw)[None, :, None, :]
    worst = max(0.0, float(u.max()))
    return worst <= tol, worst
