import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holotherm.errors import (
    ContractionError,
    DomainError,
    InvalidDimensionError,
    MapRangeError,
    ShapeError,
    SupportError,
)
from holotherm.spaces import (
    BaseSpace,
    ContractiveIFS,
    GridFunction,
    ProbMeasure,
    build_grid,
    default_max_iter,
    eval_function,
    finite_fiber,
    pushforward_measure,
    verify_contraction,
)
from holotherm.systems import (
    affine_system,
    cantor_system,
    doubling_system,
    half_map_system,
    word_shift_system,
)


class TestGrid:
    def test_two_nodes(self):
        g = build_grid(2)
        assert list(g.nodes) == [0.0, 1.0]
        assert g.spacing == 1.0

    def test_three_nodes(self):
        assert list(build_grid(3).nodes) == [0.0, 0.5, 1.0]

    def test_spacing_257(self):
        assert build_grid(257).spacing == pytest.approx(1 / 256, abs=0)

    def test_rejects_single_node(self):
        with pytest.raises(InvalidDimensionError):
            build_grid(1)


class TestContraction:
    def test_half_map_passes(self):
        assert verify_contraction(half_map_system()).passed

    def test_identity_fails_with_witness(self):
        ifs = affine_system([[1.0, 0.0]], gamma=0.9)
        with pytest.raises(ContractionError) as info:
            verify_contraction(ifs)
        assert info.value.witness is not None
        assert info.value.ratio == pytest.approx(1.0)

    def test_doubling_branches_pass(self):
        rep = verify_contraction(doubling_system(), samples=5000)
        assert rep.passed and rep.max_ratio <= 0.5 + 1e-12

    def test_cantor_needs_two_thirds(self):
        assert verify_contraction(cantor_system()).passed
        rep = verify_contraction(cantor_system(), gamma=0.5, raise_on_fail=False)
        assert not rep.passed

    def test_word_shift_exhaustive(self):
        rep = verify_contraction(word_shift_system(3))
        assert rep.passed and rep.pairs_checked == 2 * 2 * 8 * 8

    @given(st.floats(0.5, 0.99))
    def test_monotone_in_gamma(self, g):
        ifs = doubling_system(17)
        assert verify_contraction(ifs, gamma=g, samples=200).passed

    def test_out_of_range_branch(self):
        with pytest.raises(MapRangeError):
            affine_system([[0.5, 0.7]], gamma=0.5)


class TestPushforward:
    def test_on_grid_image(self):
        ifs = half_map_system(3)
        out = pushforward_measure(ifs, 0, ProbMeasure.dirac(3, 2))
        np.testing.assert_allclose(out.weights, [0, 1, 0])

    def test_linear_split(self):
        ifs = half_map_system(3)
        out = pushforward_measure(ifs, 0, ProbMeasure.dirac(3, 1))
        np.testing.assert_allclose(out.weights, [0.5, 0.5, 0.0])

    def test_identity_table(self):
        ifs = ContractiveIFS(BaseSpace.discrete([0]), finite_fiber(1 - np.eye(4)), 0.5,
                             table=np.arange(4)[None, :])
        m = ProbMeasure.uniform(4)
        np.testing.assert_allclose(pushforward_measure(ifs, 0, m).weights, m.weights)

    def test_first_moment_exact_for_affine(self):
        ifs = doubling_system(65)
        rng = np.random.default_rng(0)
        m = ProbMeasure.normalized(rng.random(65))
        for x, (a, b) in enumerate(ifs.affine):
            out = pushforward_measure(ifs, x, m)
            assert out.moment(ifs.fiber.nodes) == pytest.approx(a * m.moment(ifs.fiber.nodes) + b,
                                                                abs=1e-14)

    @given(st.lists(st.floats(0, 1), min_size=33, max_size=33).filter(lambda v: sum(v) > 1e-3),
           st.integers(0, 1))
    def test_mass_and_sign(self, w, x):
        ifs = doubling_system(33)
        out = pushforward_measure(ifs, x, ProbMeasure.normalized(w))
        assert abs(out.weights.sum() - 1) < 1e-12
        assert np.all(out.weights >= 0)


class TestEvalFunction:
    def test_linear_exact(self):
        g = build_grid(9)
        f = GridFunction(g.nodes, g)
        for z in (0.0, 0.1234, 0.5, 0.999, 1.0):
            assert eval_function(f, z) == pytest.approx(z, abs=1e-15)

    def test_constant(self):
        g = build_grid(5)
        assert eval_function(GridFunction(np.ones(5), g), 0.123) == 1.0

    def test_square_on_three_nodes(self):
        g = build_grid(3)
        assert eval_function(GridFunction(g.nodes ** 2, g), 0.25) == pytest.approx(0.125)

    def test_outside_domain(self):
        g = build_grid(3)
        with pytest.raises(DomainError):
            eval_function(GridFunction(np.zeros(3), g), 1.5)

    def test_recorded_lip_too_small(self):
        g = build_grid(3)
        with pytest.raises(ValueError):
            GridFunction(g.nodes, g, lip=0.5)

    @given(st.lists(st.floats(-5, 5), min_size=17, max_size=17),
           st.floats(0, 1), st.floats(0, 1))
    def test_lip_bound_and_nodes(self, vals, z1, z2):
        g = build_grid(17)
        f = GridFunction(np.array(vals), g)
        np.testing.assert_array_equal(eval_function(f, g.nodes), f.values)
        assert abs(eval_function(f, z1) - eval_function(f, z2)) <= f.lip * abs(z1 - z2) + 1e-9


class TestMeasures:
    def test_sum_checked(self):
        with pytest.raises(ValueError):
            ProbMeasure(np.array([0.5, 0.6]))

    def test_full_support_required(self):
        with pytest.raises(SupportError):
            ProbMeasure(np.array([1.0, 0.0])).require_full_support()

    def test_empty(self):
        with pytest.raises(InvalidDimensionError):
            ProbMeasure(np.array([]))

    def test_metric_validated(self):
        with pytest.raises(ValueError):
            BaseSpace((0, 1), np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_table_shape(self):
        with pytest.raises((ShapeError, ValueError)):
            ContractiveIFS(BaseSpace.discrete([0, 1]), finite_fiber(1 - np.eye(2)), 0.5,
                           table=np.zeros((3, 2), dtype=int))


def test_default_iteration_cap():
    # gamma = 1/2, tol = 1e-10: ceil(33.2) = 34 contraction steps, times ten
    assert default_max_iter(1e-10, 0.5) == 340
