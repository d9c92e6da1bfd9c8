import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holotherm.errors import MissingCertificateError
from holotherm.oracles import conditional_kl_entropy, kl_divergence, singleton_pressure
from holotherm.systems import (
    doubling_system,
    fair,
    random_lipschitz_cost,
    singleton_system,
    word_shift_system,
)
from holotherm.thermo import (
    entropy_equilibrium,
    entropy_variational,
    equilibrium,
    holonomy_residual,
    pressure,
    pressure_gradient,
)
from holotherm.transfer import normalize_cost, plan_from_weights


class TestPressure:
    def test_zero(self, doubling):
        rep = pressure(np.zeros(doubling.shape), fair(doubling), doubling)
        assert rep.P == 0.0 and rep.lam == 1.0

    def test_constant(self, doubling_small):
        rep = pressure(np.full(doubling_small.shape, -0.4), fair(doubling_small), doubling_small)
        assert rep.P == pytest.approx(-0.4, abs=1e-12)

    def test_singleton_closed_form(self, rng):
        for d in (2, 3, 5):
            p = rng.dirichlet(np.ones(d))
            c = rng.normal(size=d)
            rep = pressure(c, p, singleton_system(d))
            assert rep.P == pytest.approx(singleton_pressure(c, p).value, abs=1e-12)
            assert rep.gap < 1e-12

    def test_variational_identity(self, doubling, rng):
        for _ in range(3):
            c = random_lipschitz_cost(doubling, rng)
            rep = pressure(c, fair(doubling), doubling)
            assert rep.gap < 1e-6

    def test_shift(self, doubling_small, rng):
        c = random_lipschitz_cost(doubling_small, rng)
        a = pressure(c, fair(doubling_small), doubling_small).P
        b = pressure(c + 2.5, fair(doubling_small), doubling_small).P
        assert b - a == pytest.approx(2.5, abs=1e-10)

    @given(st.integers(0, 2 ** 31), st.floats(0, 1))
    def test_convexity(self, seed, t):
        ifs = doubling_system(65)
        rng = np.random.default_rng(seed)
        c1, c2 = random_lipschitz_cost(ifs, rng), random_lipschitz_cost(ifs, rng)
        mix = pressure(t * c1 + (1 - t) * c2, fair(ifs), ifs).P
        assert mix <= t * pressure(c1, fair(ifs), ifs).P + (1 - t) * pressure(c2, fair(ifs), ifs).P + 1e-8

    def test_report_fields(self, doubling_small):
        d = pressure(np.zeros(doubling_small.shape), fair(doubling_small), doubling_small).to_dict()
        assert {"P", "lambda", "entropy", "gap"} <= set(d)


class TestEntropyEquilibrium:
    def test_zero_cost(self, doubling_small):
        eq = equilibrium(np.zeros(doubling_small.shape), fair(doubling_small), doubling_small)
        assert entropy_equilibrium(eq.plan).H == 0.0

    def test_singleton_kl(self):
        p, q = np.array([0.5, 0.5]), np.array([0.25, 0.75])
        eq = equilibrium(np.log(q / p), p, singleton_system(2))
        rep = entropy_equilibrium(eq.plan)
        assert rep.H == pytest.approx(-kl_divergence(q, p), abs=1e-12)
        assert rep.H == pytest.approx(-0.130812, abs=1e-6)
        assert rep.I == -rep.H

    def test_needs_certificate(self):
        plan = plan_from_weights(np.array([0.25, 0.75]), singleton_system(2))
        with pytest.raises(MissingCertificateError):
            entropy_equilibrium(plan)


class TestEntropyVariational:
    def test_matches_equilibrium(self, doubling_small, rng):
        c = random_lipschitz_cost(doubling_small, rng)
        eq = equilibrium(c, fair(doubling_small), doubling_small)
        exact = entropy_equilibrium(eq.plan).H
        var = entropy_variational(eq.plan.weights, fair(doubling_small), doubling_small)
        assert abs(var.H - exact) < 1e-6
        assert var.method == "variational-lower-bound"

    def test_singleton_many_candidates(self, rng):
        p = rng.dirichlet(np.ones(4))
        q = rng.dirichlet(np.ones(4))
        rep = entropy_variational(q, p, singleton_system(4), candidates=200)
        assert rep.H == pytest.approx(-kl_divergence(q, p), abs=1e-6)
        assert rep.candidates == 202

    def test_finite_fiber_closed_form(self, rng):
        ifs = word_shift_system(3)
        eq = equilibrium(rng.normal(size=ifs.shape), fair(ifs), ifs)
        rep = entropy_variational(eq.plan.weights, fair(ifs), ifs)
        assert rep.H == pytest.approx(conditional_kl_entropy(eq.plan.weights, fair(ifs).weights), abs=1e-10)

    @given(st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda v: sum(v) > 1e-3))
    def test_nonpositive(self, w):
        q = np.array(w) / sum(w)
        rep = entropy_variational(q, np.ones(3) / 3, singleton_system(3), candidates=4)
        assert rep.H <= 1e-12

    def test_zero_pressure_formulation(self, doubling_small, rng):
        # normalized candidates have zero pressure, so the sup over P = 0 agrees
        eq = equilibrium(random_lipschitz_cost(doubling_small, rng), fair(doubling_small),
                         doubling_small)
        for _ in range(5):
            nc = normalize_cost(random_lipschitz_cost(doubling_small, rng), fair(doubling_small),
                                doubling_small)
            assert abs(pressure(nc, fair(doubling_small), doubling_small).P) < 1e-10
            assert np.sum(eq.plan.weights * nc.values) <= -entropy_equilibrium(eq.plan).H + 1e-8


class TestDominance:
    def test_dominance(self, doubling_small, rng):
        eq = equilibrium(random_lipschitz_cost(doubling_small, rng), fair(doubling_small),
                         doubling_small)
        c0 = eq.normalized.values
        base = float(np.sum(eq.plan.weights * c0))
        for _ in range(10):
            c = normalize_cost(random_lipschitz_cost(doubling_small, rng, amplitude=1.0),
                               fair(doubling_small), doubling_small).values
            assert float(np.sum(eq.plan.weights * c)) <= base + 1e-8


class TestGradient:
    def test_constant_direction(self, doubling_small, rng):
        c = random_lipschitz_cost(doubling_small, rng)
        g = pressure_gradient(c, fair(doubling_small), doubling_small,
                              np.ones(doubling_small.shape))
        assert g == pytest.approx(1.0, abs=1e-12)

    def test_singleton(self, rng):
        p, c, g = rng.dirichlet(np.ones(3)), rng.normal(size=3), rng.normal(size=3)
        w = np.exp(c) * p
        assert pressure_gradient(c, p, singleton_system(3), g) == pytest.approx(
            float(w @ g / w.sum()), abs=1e-12)


def test_reexported_holonomy(doubling_small):
    eq = equilibrium(np.zeros(doubling_small.shape), fair(doubling_small), doubling_small)
    assert holonomy_residual(eq.plan, doubling_small) < 1e-12
