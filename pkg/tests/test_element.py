import numpy as np
import pytest

from hermevp import (BadGrouping, DegreeTooLow, DimensionMismatch,
                     HermiteData, InvalidSpec, PiecewiseFunction, gauss_rule,
                     hermite_basis, hermite_interpolant, shape_table)
from hermevp.element import eval_layer_function


class TestGaussRule:
    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_exact_for_polynomials_up_to_degree_2n_minus_1(self, n):
        rule = gauss_rule(n)
        for k in range(2 * n):
            integral = float(rule.weights @ rule.points**k)
            assert integral == pytest.approx(1.0 / (k + 1), rel=1e-14)

    def test_points_inside_unit_interval(self):
        rule = gauss_rule(6)
        assert np.all(rule.points > 0.0) and np.all(rule.points < 1.0)
        assert rule.weights.sum() == pytest.approx(1.0, rel=1e-15)
        assert rule.n_points == 6

    def test_rejects_nonpositive_count(self):
        with pytest.raises(InvalidSpec):
            gauss_rule(0)


class TestHermiteBasis:
    @pytest.mark.parametrize("p", [3, 4, 5, 6])
    def test_cardinal_values_and_slopes_at_endpoints(self, p):
        ends = np.array([0.0, 1.0])
        vals = hermite_basis(p, ends, 0)
        d1 = hermite_basis(p, ends, 1)
        expect_vals = np.zeros((p + 1, 2))
        expect_d1 = np.zeros((p + 1, 2))
        expect_vals[0, 0] = 1.0
        expect_d1[1, 0] = 1.0
        expect_vals[2, 1] = 1.0
        expect_d1[3, 1] = 1.0
        assert np.allclose(vals, expect_vals, atol=1e-14)
        assert np.allclose(d1, expect_d1, atol=1e-14)

    @pytest.mark.parametrize("p", [5, 7])
    def test_bubbles_vanish_to_first_order_at_endpoints(self, p):
        ends = np.array([0.0, 1.0])
        vals = hermite_basis(p, ends, 0)
        d1 = hermite_basis(p, ends, 1)
        assert np.max(np.abs(vals[4:])) < 1e-13
        assert np.max(np.abs(d1[4:])) < 1e-13

    def test_value_shapes_partition_unity(self):
        s = np.linspace(0.0, 1.0, 33)
        vals = hermite_basis(3, s, 0)
        assert np.allclose(vals[0] + vals[2], 1.0, atol=1e-14)

    @pytest.mark.parametrize("p", [3, 5])
    @pytest.mark.parametrize("deriv", [1, 2])
    def test_derivatives_match_finite_differences(self, p, deriv):
        rng = np.random.default_rng(421)
        s = rng.uniform(0.05, 0.95, size=24)
        h = 1e-6
        lower = hermite_basis(p, s - h, deriv - 1)
        upper = hermite_basis(p, s + h, deriv - 1)
        fd = (upper - lower) / (2.0 * h)
        exact = hermite_basis(p, s, deriv)
        assert np.allclose(fd, exact, rtol=1e-6, atol=1e-6)

    def test_degree_below_three_rejected(self):
        with pytest.raises(DegreeTooLow):
            hermite_basis(2, np.array([0.5]))

    def test_negative_derivative_order_rejected(self):
        with pytest.raises(InvalidSpec):
            hermite_basis(3, np.array([0.5]), deriv=-1)

    def test_basis_spans_monomials(self):
        # A degree-p basis on [0, 1] must reproduce every monomial s^k.
        p = 5
        s = np.linspace(0.0, 1.0, p + 1)
        vals = hermite_basis(p, s, 0)
        for k in range(p + 1):
            coef, *_ = np.linalg.lstsq(vals.T, s**k, rcond=None)
            assert np.allclose(vals.T @ coef, s**k, atol=1e-12)


class TestShapeTable:
    def test_default_rule_has_two_p_points(self):
        table = shape_table(4)
        assert table.rule.n_points == 8
        assert table.values.shape == (5, 8)
        assert table.d1.shape == table.d2.shape == table.values.shape

    def test_explicit_rule_is_kept(self):
        rule = gauss_rule(12)
        table = shape_table(3, rule)
        assert table.rule is rule
        assert np.array_equal(table.values, hermite_basis(3, rule.points, 0))


class TestHermiteData:
    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            HermiteData(nodes=[0.0, 1.0], values=[0.0, 1.0], slopes=[0.0])

    def test_nodes_must_increase(self):
        with pytest.raises(InvalidSpec):
            HermiteData(nodes=[0.0, 0.5, 0.5], values=[0.0] * 3,
                        slopes=[0.0] * 3)

    def test_needs_two_nodes(self):
        with pytest.raises(InvalidSpec):
            HermiteData(nodes=[0.0], values=[1.0], slopes=[0.0])


class TestPiecewiseFunction:
    def test_evaluation_and_derivative_scaling(self):
        # One piece on [0, 2] holding t^2 in the local coordinate t = x/2.
        f = PiecewiseFunction(np.array([0.0, 2.0]), np.array([[0.0, 0.0, 1.0]]))
        assert f(1.0)[0] == pytest.approx(0.25, rel=1e-15)
        assert f(1.0, deriv=1)[0] == pytest.approx(0.5, rel=1e-15)
        assert f(1.0, deriv=2)[0] == pytest.approx(0.5, rel=1e-15)

    def test_break_count_checked(self):
        with pytest.raises(DimensionMismatch):
            PiecewiseFunction(np.array([0.0, 1.0]), np.zeros((2, 3)))

    def test_points_outside_clamp_to_end_pieces(self):
        f = PiecewiseFunction(np.array([0.0, 1.0, 2.0]),
                              np.array([[0.0, 1.0], [1.0, 1.0]]))
        assert f(2.0)[0] == pytest.approx(2.0, rel=1e-15)
        assert f(0.0)[0] == 0.0


class TestHermiteInterpolant:
    def test_reproduces_cubic_exactly(self):
        x = np.linspace(0.0, 1.0, 5)
        data = HermiteData(nodes=x,
                           values=2 * x**3 - x**2 + 3 * x - 1,
                           slopes=6 * x**2 - 2 * x + 3)
        f = hermite_interpolant(data, n=1)
        xs = np.linspace(0.0, 1.0, 401)
        exact = 2 * xs**3 - xs**2 + 3 * xs - 1
        assert np.max(np.abs(f(xs) - exact)) < 1e-13
        dexact = 6 * xs**2 - 2 * xs + 3
        assert np.max(np.abs(f(xs, deriv=1) - dexact)) < 1e-11

    def test_reproduces_quintic_with_pairs_of_intervals(self):
        x = np.linspace(0.0, 1.0, 5)
        data = HermiteData(nodes=x,
                           values=x**5 - 2 * x**4 + x - 3,
                           slopes=5 * x**4 - 8 * x**3 + 1)
        f = hermite_interpolant(data, n=2)
        xs = np.linspace(0.0, 1.0, 401)
        exact = xs**5 - 2 * xs**4 + xs - 3
        assert np.max(np.abs(f(xs) - exact)) < 1e-12

    def test_grouping_must_divide_interval_count(self):
        x = np.linspace(0.0, 1.0, 5)
        data = HermiteData(nodes=x, values=np.sin(x), slopes=np.cos(x))
        with pytest.raises(BadGrouping):
            hermite_interpolant(data, n=3)

    def test_group_size_positive(self):
        x = np.linspace(0.0, 1.0, 5)
        data = HermiteData(nodes=x, values=np.sin(x), slopes=np.cos(x))
        with pytest.raises(InvalidSpec):
            hermite_interpolant(data, n=0)

    def test_smooth_function_rates_on_uniform_grids(self):
        # Cubic Hermite interpolation of sin(pi x): errors should shrink
        # like n^-4 (values) and n^-3 (first derivative).
        xs = np.linspace(0.0, 1.0, 2001)
        ns = np.array([4, 8, 16, 32, 64])
        e0, e1 = [], []
        for n in ns:
            x = np.linspace(0.0, 1.0, n + 1)
            data = HermiteData(nodes=x, values=np.sin(np.pi * x),
                               slopes=np.pi * np.cos(np.pi * x))
            f = hermite_interpolant(data, n=1)
            e0.append(np.max(np.abs(f(xs) - np.sin(np.pi * xs))))
            e1.append(np.max(np.abs(f(xs, deriv=1)
                                    - np.pi * np.cos(np.pi * xs))))
        slope0 = -np.polyfit(np.log(ns), np.log(e0), 1)[0]
        slope1 = -np.polyfit(np.log(ns), np.log(e1), 1)[0]
        assert abs(slope0 - 4.0) < 0.2
        assert abs(slope1 - 3.0) < 0.2


class TestLayerFunction:
    def test_left_and_right_values(self):
        x = np.array([0.0, 0.5, 1.0])
        left = eval_layer_function(x, epsilon=0.1, beta=2.0, side="left")
        right = eval_layer_function(x, epsilon=0.1, beta=2.0, side="right")
        rate = 20.0
        assert np.allclose(left, np.exp(-rate * x), rtol=1e-15)
        assert np.allclose(right, np.exp(-rate * (1.0 - x)), rtol=1e-15)

    def test_derivative_prefactors(self):
        x = np.array([0.3])
        rate = 5.0 / 0.25
        d1 = eval_layer_function(x, 0.25, 5.0, side="left", deriv=1)
        d2 = eval_layer_function(x, 0.25, 5.0, side="right", deriv=2)
        assert d1[0] == pytest.approx(-rate * np.exp(-rate * 0.3), rel=1e-14)
        assert d2[0] == pytest.approx(rate**2 * np.exp(-rate * 0.7), rel=1e-14)

    def test_bad_arguments(self):
        with pytest.raises(InvalidSpec):
            eval_layer_function(np.array([0.5]), 0.0, 1.0)
        with pytest.raises(InvalidSpec):
            eval_layer_function(np.array([0.5]), 0.1, 1.0, side="top")
