"""Acceptance criteria, one test each.

Every test emits a single ``PASS``/``FAIL`` line. Under pytest the lines are
collected and printed in the terminal summary (see conftest.py); run as a
script, ``python3 tests/test_acceptance.py``, they are printed directly.
"""

import sys
import time

import numpy as np

from holotherm.duality import (
    kantorovich_solve,
    marginal_pressure,
    single_marginal_dual,
    slackness_check,
    two_marginal_dual,
)
from holotherm.oracles import (
    chaos_game_measure,
    fd_pressure_gradient,
    kl_divergence,
    singleton_pressure,
    transport_bruteforce,
)
from holotherm.systems import (
    doubling_system,
    fair,
    half_map_system,
    random_lipschitz_cost,
    singleton_system,
    word_shift_system,
)
from holotherm.thermo import entropy_equilibrium, equilibrium, pressure, pressure_gradient
from holotherm.transfer import (
    bousch_limit,
    invariant_measure,
    normalize_cost,
    power_eigenpair,
    transfer_orbit,
)


LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    LINES.append(line)
    print(line, flush=True)
    assert ok, detail


def test_01_singleton_eigenvalue():
    rng = np.random.default_rng(101)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(100):
        d = int(rng.integers(1, 9))
        c = rng.normal(scale=2.0, size=d)
        p = rng.dirichlet(np.ones(d))
        eig = power_eigenpair(c, p, singleton_system(d))
        worst = max(worst, abs(eig.log_lambda - singleton_pressure(c, p).value))
    elapsed = time.perf_counter() - start
    report(1, "singleton eigenvalue vs direct sum", worst < 1e-10 and elapsed < 1.0,
           f"max error {worst:.2e} (< 1e-10), {elapsed:.3f} s (< 1 s)")


def test_02_half_map_eigenpair():
    ifs = half_map_system()
    eig = power_eigenpair(np.zeros(ifs.shape), [1.0], ifs)
    lam_err = abs(eig.lam - 1.0)
    h_err = float(np.max(np.abs(eig.h.values - 1.0)))
    vanishing = eig.h.values.min() < 0.5
    report(2, "half map z/2 with zero cost", lam_err < 1e-10 and h_err < 1e-10 and not vanishing,
           f"|lambda - 1| = {lam_err:.1e}, sup|h - 1| = {h_err:.1e}, min h = {eig.h.values.min():.3f}")


def test_03_bousch_validator():
    ifs = doubling_system()
    rng = np.random.default_rng(303)
    worst, lip_ok = 0.0, True
    for _ in range(10):
        c = random_lipschitz_cost(ifs, rng)
        lim = bousch_limit(c, fair(ifs), ifs, s_values=(0.9, 0.99, 0.999))
        worst = max(worst, abs(lim["extrapolated"] - power_eigenpair(c, fair(ifs), ifs).log_lambda))
        bound = ifs.fiber.lipschitz(c) / (1 - ifs.gamma)
        lip_ok &= all(l <= bound * (1 + 1e-12) for l in lim["lip"])
    report(3, "discounted fixed point extrapolates log lambda", worst < 1e-3 and lip_ok,
           f"max error {worst:.2e} (< 1e-3), lip(u_s) <= Lip(c)/(1-gamma): {lip_ok}")


def test_04_invariant_measure():
    ifs = doubling_system(513)
    start = time.perf_counter()
    nc = normalize_cost(np.zeros(ifs.shape), fair(ifs), ifs)
    rho = invariant_measure(nc, fair(ifs), ifs)
    m1, m2 = rho.moment(ifs.fiber.nodes, 1), rho.moment(ifs.fiber.nodes, 2)
    mc = chaos_game_measure(nc.values, fair(ifs).weights, ifs, samples=100_000, seed=4)
    elapsed = time.perf_counter() - start
    z1 = abs(m1 - mc.moments[0]) / mc.stderr[0]
    z2 = abs(m2 - mc.moments[1]) / mc.stderr[1]
    ok = abs(m1 - 0.5) < 1e-6 and abs(m2 - 1 / 3) < 1e-3 and z1 < 3 and z2 < 3 and elapsed < 5
    report(4, "fair doubling invariant measure", ok,
           f"|m1 - 1/2| = {abs(m1 - 0.5):.1e}, |m2 - 1/3| = {abs(m2 - 1 / 3):.1e}, "
           f"chaos game at {z1:.2f}/{z2:.2f} SE, {elapsed:.2f} s")


def test_05_variational_principle():
    ifs = doubling_system()
    rng = np.random.default_rng(505)
    worst = 0.0
    for _ in range(20):
        c = random_lipschitz_cost(ifs, rng)
        eq = equilibrium(c, fair(ifs), ifs)
        value = float(np.sum(eq.plan.weights * c)) + entropy_equilibrium(eq.plan).H
        worst = max(worst, abs(value - eq.log_lambda))
    report(5, "int c dpi + H(pi) = log lambda", worst < 1e-6,
           f"max error {worst:.2e} (< 1e-6) over 20 costs, grid n={ifs.fiber.size}")


def test_06_dominance():
    ifs = doubling_system()
    rng = np.random.default_rng(606)
    eq = equilibrium(random_lipschitz_cost(ifs, rng, amplitude=1.0), fair(ifs), ifs)
    c0 = eq.normalized.values
    base = float(np.sum(eq.plan.weights * c0))
    excess = -np.inf
    for _ in range(50):
        c = normalize_cost(random_lipschitz_cost(ifs, rng, amplitude=1.0), fair(ifs), ifs).values
        excess = max(excess, float(np.sum(eq.plan.weights * c)) - base)
    report(6, "normalized c0 dominates at its equilibrium", excess <= 1e-8,
           f"max int(c - c0) dpi0 = {excess:.2e} (<= 1e-8) over 50 costs")


def test_07_single_marginal_duality():
    ifs = doubling_system()
    alpha = np.array([0.5, 0.5])
    cases = [((0.0, 0.0), (0.25, 0.75)), ((1.0, 0.0), (0.5, 0.5)),
             ((0.3, -0.7), (0.9, 0.1)), ((-0.2, 0.4), (0.6, 0.4))]
    worst_obj = worst_tv = worst_time = 0.0
    quarter = None
    for a, mu in cases:
        a, mu = np.array(a), np.array(mu)
        start = time.perf_counter()
        dual, plan = single_marginal_dual(a, mu, alpha, ifs)
        worst_time = max(worst_time, time.perf_counter() - start)
        closed = float(mu @ a) - kl_divergence(mu, alpha)
        worst_obj = max(worst_obj, abs(dual.objective - closed))
        worst_tv = max(worst_tv, 0.5 * float(np.abs(plan.x_marginal - mu).sum()))
        if quarter is None:
            quarter = dual.objective
    ok = (worst_obj < 1e-4 and worst_tv < 1e-4 and abs(quarter + 0.130812) < 1e-4
          and worst_time < 10)
    report(7, "single-marginal dual on Bernoulli instances", ok,
           f"objective error {worst_obj:.1e}, TV {worst_tv:.1e}, mu=(1/4,3/4) gives "
           f"{quarter:.6f}, slowest {worst_time:.2f} s")


def test_08_marginal_pressure():
    rng = np.random.default_rng(808)
    worst = 0.0
    for k in (2, 3):
        ifs = word_shift_system(k)
        for _ in range(2):
            b = rng.normal(scale=0.5, size=ifs.shape)
            d = rng.normal(scale=0.5, size=ifs.shape)
            al, be = rng.dirichlet(np.ones(2)), rng.dirichlet(np.ones(2))
            c = b[:, None, :, None] + d[None, :, None, :]
            mp = marginal_pressure(c, al, be, ifs, ifs)
            ref = pressure(b, al, ifs).P + pressure(d, be, ifs).P
            worst = max(worst, abs(mp.value - ref))
    report(8, "marginal pressure splits on separable costs", worst < 1e-3,
           f"max |P^m - P(b) - P(d)| = {worst:.2e} (< 1e-3), |Z| = |W| in (4, 8)")


def test_09_kantorovich():
    rng = np.random.default_rng(909)
    lp_err = zt_err = ent_err = 0.0
    for i in range(10):
        m, n = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        if i == 0:
            m = n = 4
        c = rng.normal(size=(m, n))
        mu, nu = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        alpha, beta = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
        brute = transport_bruteforce(c, mu, nu).value
        _, lp = kantorovich_solve(c, mu, nu)
        lp_err = max(lp_err, abs(lp.primal - brute))
        sx, sy = singleton_system(m), singleton_system(n)
        zt, _ = two_marginal_dual(c, mu, nu, alpha, beta, sx, sy, entropic=False)
        zt_err = max(zt_err, abs(zt.objective - brute))
        ent, _ = two_marginal_dual(c, mu, nu, alpha, beta, sx, sy)
        ref = brute - kl_divergence(mu, alpha) - kl_divergence(nu, beta)
        ent_err = max(ent_err, abs(ent.objective - ref))
    ok = lp_err < 1e-9 and zt_err < 1e-4 and ent_err < 1e-4
    report(9, "Kantorovich reduction", ok,
           f"LP vs enumeration {lp_err:.1e} (< 1e-9); two-marginal dual {zt_err:.1e} "
           f"without and {ent_err:.1e} with entropy terms (< 1e-4)")


def test_10_pressure_gradient():
    ifs = doubling_system(257)
    rng = np.random.default_rng(1010)
    worst = 0.0
    for _ in range(10):
        c = random_lipschitz_cost(ifs, rng)
        g = random_lipschitz_cost(ifs, rng, amplitude=1.0)
        fd = fd_pressure_gradient(c, fair(ifs).weights, ifs, g, epsilon=1e-4)
        worst = max(worst, abs(fd - pressure_gradient(c, fair(ifs), ifs, g)))
    report(10, "finite-difference pressure gradient", worst < 1e-4,
           f"max |fd - int g dpi| = {worst:.2e} (< 1e-4) at eps = 1e-4")


def test_11_monotone_envelope():
    ifs = doubling_system()
    rng = np.random.default_rng(1111)
    mono, worst_gap = True, 0.0
    for _ in range(10):
        nc = normalize_cost(random_lipschitz_cost(ifs, rng), fair(ifs), ifs)
        u = random_lipschitz_cost(ifs, rng, amplitude=2.0)[0]
        orbit = transfer_orbit(nc, fair(ifs), ifs, u, 50)
        sup, inf = orbit.max(axis=1), orbit.min(axis=1)
        mono &= bool(np.all(np.diff(sup) <= 1e-13) and np.all(np.diff(inf) >= -1e-13))
        worst_gap = max(worst_gap, float(sup[-1] - inf[-1]))
    report(11, "monotone envelope of L^n u", mono and worst_gap < 1e-6,
           f"monotone: {mono}, max gap at n=50 {worst_gap:.1e} (< 1e-6)")


def test_12_slackness():
    ifs = doubling_system()
    rng = np.random.default_rng(1212)
    passed, rejected, worst = True, True, 0.0
    for mu in ([0.3, 0.7], [0.55, 0.45], [0.8, 0.2]):
        mu = np.array(mu)
        c = random_lipschitz_cost(ifs, rng)
        dual, _ = single_marginal_dual(c, mu, fair(ifs), ifs)
        rep = slackness_check(c, dual.phi, fair(ifs), ifs, tol=1e-5, mu=mu)
        passed &= rep.optimal
        worst = max(worst, rep.identity_residual)
        phi = dual.phi + np.array([0.1, 0.0])
        phi = phi + pressure(c - phi[:, None], fair(ifs), ifs).P
        rejected &= not slackness_check(c, phi, fair(ifs), ifs, tol=1e-5, mu=mu).optimal
    report(12, "slackness certificates", passed and rejected,
           f"dual certificates pass: {passed} (residual {worst:.1e}), perturbed rejected: {rejected}")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)
