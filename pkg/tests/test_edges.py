import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from kansynth.edges import (
    A0,
    Affine,
    Composite,
    Named,
    Polynomial,
    Spline,
    SplineSpace,
    affine_in_space,
    base_function,
    base_lipschitz,
    eval_edge,
    register_table,
    registered_names,
    scale_edge,
    spline_basis,
    unregister_table,
)
from kansynth.errors import RegistryError, StructureError


def cox_de_boor(ext, i, k, t):
    """Textbook recursive definition, right-open intervals, 0/0 := 0."""
    if k == 0:
        return 1.0 if ext[i] <= t < ext[i + 1] else 0.0
    out = 0.0
    if ext[i + k] != ext[i]:
        out += (t - ext[i]) / (ext[i + k] - ext[i]) * cox_de_boor(ext, i, k - 1, t)
    if ext[i + k + 1] != ext[i + 1]:
        out += (ext[i + k + 1] - t) / (ext[i + k + 1] - ext[i + 1]) * cox_de_boor(ext, i + 1, k - 1, t)
    return out


def random_space(rng, max_degree=5):
    k = int(rng.integers(1, max_degree + 1))
    M = int(rng.integers(1, 9))
    knots = np.cumsum(rng.uniform(0.1, 2.0, size=M + 1)) - rng.uniform(0, 5)
    return SplineSpace(k, tuple(knots))


class TestEvalEdgeExamples:
    def test_negation(self):
        assert eval_edge(Affine(-1.0, 0.0), 3.5) == -3.5

    def test_silu_at_zero(self):
        assert eval_edge(Named("silu"), 0.0) == 0.0

    def test_cubic_polynomial(self):
        assert eval_edge(Polynomial((1, 1, 0, 1)), 2.0) == 11.0

    def test_uniform_cubic_bspline_center(self):
        # B_3 of the clamped space on {0,..,4} has the simple knots 0,1,2,3,4
        space = SplineSpace(3, (0, 1, 2, 3, 4))
        coeffs = np.zeros(space.dim)
        coeffs[3] = 1.0
        assert eval_edge(Spline(space, tuple(coeffs)), 2.0) == pytest.approx(2.0 / 3.0, abs=1e-15)


class TestSplineSpace:
    def test_dim_counts_knots_plus_degree(self):
        space = SplineSpace(3, (0.0, 0.5, 1.0, 2.0))
        assert space.dim == 3 + 3
        assert len(space.extended_knots) == space.dim + space.degree + 1

    def test_extended_knots_clamped(self):
        space = SplineSpace(2, (0.0, 1.0, 3.0))
        assert space.extended_knots == (0.0, 0.0, 0.0, 1.0, 3.0, 3.0, 3.0)

    @pytest.mark.parametrize(
        "degree, knots",
        [(0, (0, 1)), (2, (0,)), (2, (0, 1, 1)), (2, (1, 0)), (2, (0, float("nan"))), (64, (0, 1)), (1.5, (0, 1))],
    )
    def test_invalid(self, degree, knots):
        with pytest.raises(StructureError):
            SplineSpace(degree, knots)

    def test_uniform(self):
        space = SplineSpace.uniform(3, -1.0, 1.0, 8)
        assert len(space.knots) == 10
        assert space.interval == (-1.0, 1.0)

    def test_greville_averages(self):
        space = SplineSpace(2, (0.0, 1.0, 3.0))
        np.testing.assert_allclose(space.greville(), [0.0, 0.5, 2.0, 3.0])


class TestSplineBasis:
    def test_hat_functions(self):
        space = SplineSpace(1, (0.0, 1.0, 2.0))
        np.testing.assert_array_equal(spline_basis(space, 0.5), [0.5, 0.5, 0.0])

    def test_left_endpoint(self):
        space = SplineSpace(3, (0.0, 0.3, 1.0, 2.5))
        expected = np.zeros(space.dim)
        expected[0] = 1.0
        np.testing.assert_array_equal(spline_basis(space, 0.0), expected)

    def test_right_endpoint(self):
        space = SplineSpace(3, (0.0, 0.3, 1.0, 2.5))
        expected = np.zeros(space.dim)
        expected[-1] = 1.0
        np.testing.assert_allclose(spline_basis(space, 2.5), expected, atol=1e-15)

    def test_matches_recursive_definition(self, rng):
        for _ in range(60):
            space = random_space(rng)
            ext = space.extended_knots
            lo, hi = space.interval
            for t in rng.uniform(lo, hi, size=5):
                expected = [cox_de_boor(ext, i, space.degree, t) for i in range(space.dim)]
                np.testing.assert_allclose(spline_basis(space, t), expected, atol=1e-13)

    def test_array_shape(self):
        space = SplineSpace.uniform(2, 0, 1, 3)
        assert spline_basis(space, np.zeros((4, 5))).shape == (4, 5, space.dim)

    def test_partition_nonnegative_local_support(self, rng):
        for _ in range(200):
            space = random_space(rng)
            ext = np.asarray(space.extended_knots)
            lo, hi = space.interval
            t = rng.uniform(lo, hi)
            B = spline_basis(space, t)
            assert abs(B.sum() - 1.0) <= 1e-12
            assert B.min() >= -1e-15
            for i in range(space.dim):
                if not ext[i] <= t <= ext[i + space.degree + 1]:
                    assert B[i] == 0.0


class TestSplineEvaluation:
    def test_matches_scipy(self, rng):
        for _ in range(50):
            space = random_space(rng)
            coeffs = rng.normal(size=space.dim)
            ref = BSpline(np.asarray(space.extended_knots), coeffs, space.degree, extrapolate=True)
            lo, hi = space.interval
            t = np.linspace(lo - 1.0, hi + 1.0, 57)
            np.testing.assert_allclose(Spline(space, tuple(coeffs))(t), ref(t), rtol=1e-11, atol=1e-11)

    def test_basis_dot_coefficients(self, rng):
        space = SplineSpace.uniform(3, -2, 2, 5)
        coeffs = rng.normal(size=space.dim)
        t = rng.uniform(-2, 2, size=30)
        np.testing.assert_allclose(Spline(space, tuple(coeffs))(t), spline_basis(space, t) @ coeffs, atol=1e-13)

    def test_extrapolation_continues_boundary_piece(self, rng):
        space = SplineSpace(3, (0.0, 1.0, 2.0, 3.0))
        s = Spline(space, tuple(rng.normal(size=space.dim)))
        # the last piece is a cubic; fit it on [2, 3] and compare beyond 3
        inside = np.linspace(2.0, 3.0, 9)
        piece = np.polynomial.polynomial.Polynomial.fit(inside, s(inside), 3)
        outside = np.array([3.5, 4.0, 6.0])
        np.testing.assert_allclose(s(outside), piece(outside), rtol=1e-8)

    def test_continuity_of_derivative_at_interior_knots(self, rng):
        for _ in range(20):
            space = random_space(rng)
            if space.degree < 2:
                continue
            s = Spline(space, tuple(rng.normal(size=space.dim)))
            for knot in space.knots[1:-1]:
                eps = 1e-6 * max(1.0, abs(knot))
                left = (s(knot) - s(knot - eps)) / eps
                right = (s(knot + eps) - s(knot)) / eps
                assert abs(left - right) <= 1e-4 * (1.0 + abs(left))

    def test_wrong_coefficient_count(self):
        with pytest.raises(StructureError):
            Spline(SplineSpace(1, (0, 1)), (0.0,))


class TestAffineInSpace:
    def test_constant(self):
        assert affine_in_space(SplineSpace.uniform(3, 0, 1, 4), 0.0, 5.0) == (5.0,) * 8

    def test_linear_interpolation(self):
        assert affine_in_space(SplineSpace(1, (0, 1, 2)), 1.0, 0.0) == (0.0, 1.0, 2.0)

    def test_cubic_reconstruction(self):
        space = SplineSpace(3, (0, 1, 2, 3))
        t = np.linspace(0, 3, 100)
        s = Spline.affine(space, 2.0, -1.0)
        np.testing.assert_allclose(s(t), 2 * t - 1, atol=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(
        seed=st.integers(0, 2**32 - 1),
        a=st.floats(-10, 10),
        b=st.floats(-10, 10),
    )
    def test_reproduces_affine_maps(self, seed, a, b):
        rng = np.random.default_rng(seed)
        space = random_space(rng)
        lo, hi = space.interval
        t = np.linspace(lo, hi, 50)
        s = Spline.affine(space, a, b)
        scale = 1.0 + abs(a) * max(abs(lo), abs(hi)) + abs(b)
        assert np.max(np.abs(s(t) - (a * t + b))) <= 1e-12 * scale

    def test_composite_with_zero_base_weight(self):
        space = SplineSpace.uniform(3, -1, 4, 8)
        f = Composite(0.0, Named("silu"), 1.0, Spline.affine(space, -0.75, 2.5))
        t = np.linspace(-1, 4, 100)
        np.testing.assert_allclose(f(t), -0.75 * t + 2.5, atol=1e-12)


class TestRegistry:
    def test_builtins(self):
        assert {"silu", "tanh", "relu"} <= set(registered_names())
        t = np.linspace(-4, 4, 17)
        np.testing.assert_allclose(base_function("silu")(t), t / (1 + np.exp(-t)))
        np.testing.assert_array_equal(base_function("relu")(t), np.maximum(t, 0))

    def test_unknown(self):
        with pytest.raises(RegistryError):
            base_function("nope")
        with pytest.raises(RegistryError):
            Named("nope")(0.0)

    def test_table(self):
        register_table("ramp", [0.0, 1.0, 3.0], [0.0, 2.0, 3.0])
        try:
            f = Named("ramp", 2.0)
            np.testing.assert_allclose(f(np.array([-1.0, 0.5, 2.0, 5.0])), [0.0, 2.0, 5.0, 6.0])
            assert base_lipschitz("ramp") == 2.0
        finally:
            unregister_table("ramp")

    def test_table_cannot_shadow_builtin(self):
        with pytest.raises(RegistryError):
            register_table("tanh", [0, 1], [0, 1])

    @pytest.mark.parametrize("xs, ys", [([0, 0], [1, 2]), ([0], [1]), ([0, 1], [0, np.inf])])
    def test_invalid_table(self, xs, ys):
        with pytest.raises(StructureError):
            register_table("bad", xs, ys)

    def test_silu_lipschitz_bound(self):
        t = np.linspace(-20, 20, 400001)
        slope = np.max(np.abs(np.diff(base_function("silu")(t)) / np.diff(t)))
        assert slope <= base_lipschitz("silu")


class TestVariants:
    def test_affine_normalizes_negative_zero(self):
        f = Affine(-0.0, -0.0)
        assert math.copysign(1.0, f.a) == 1.0 and f == Affine(0.0, 0.0)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf")])
    def test_non_finite_parameters(self, bad):
        with pytest.raises(StructureError):
            Affine(bad, 0.0)
        with pytest.raises(StructureError):
            Polynomial((1.0, bad))

    def test_polynomial_against_numpy(self, rng):
        coeffs = rng.normal(size=7)
        t = rng.uniform(-3, 3, size=50)
        np.testing.assert_allclose(Polynomial(tuple(coeffs))(t), np.polynomial.polynomial.polyval(t, coeffs), rtol=1e-12)

    def test_polynomial_strips_trailing_zeros(self):
        p = Polynomial((1.0, 2.0, 0.0, 0.0))
        assert p.coeffs == (1.0, 2.0) and p.degree == 1 and p.leading == 2.0
        assert Polynomial((0.0, 0.0)).degree == 0

    def test_derivative(self):
        assert Polynomial((1, 1, 0, 1)).derivative() == Polynomial((1, 0, 3))

    def test_composite_value(self):
        space = SplineSpace.uniform(2, 0, 1, 3)
        s = Spline(space, tuple(np.arange(space.dim, dtype=float)))
        f = Composite(0.5, Named("tanh"), -2.0, s)
        t = np.linspace(-1, 2, 11)
        np.testing.assert_allclose(f(t), 0.5 * np.tanh(t) - 2.0 * s(t))

    def test_composite_parts_validated(self):
        space = SplineSpace(1, (0, 1))
        with pytest.raises(StructureError):
            Composite(1.0, Affine(1.0), 1.0, Spline(space, (0.0, 0.0)))
        with pytest.raises(StructureError):
            Composite(1.0, Named("silu"), 1.0, Affine(1.0))

    def test_scale_edge_every_variant(self):
        space = SplineSpace.uniform(2, 0, 1, 2)
        edges = [
            Affine(2.0, -1.0),
            Named("silu", 0.5),
            Polynomial((1.0, 0.0, 3.0)),
            Spline(space, tuple(np.linspace(-1, 1, space.dim))),
            Composite(1.0, Named("tanh"), 0.25, Spline(space, (1.0,) * space.dim)),
        ]
        t = np.linspace(-2, 2, 9)
        for f in edges:
            g = scale_edge(f, -3.0)
            assert type(g) is type(f)
            np.testing.assert_allclose(g(t), -3.0 * f(t), rtol=1e-14, atol=1e-15)

    def test_a0_family(self):
        assert A0 == {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (-1.0, 0.0), (0.5, 0.0)}

    def test_values_are_hashable(self):
        space = SplineSpace(1, (0, 1))
        assert len({Affine(1, 0), Affine(1.0, 0.0), Spline(space, (0, 1)), Spline(space, (0.0, 1.0))}) == 2
