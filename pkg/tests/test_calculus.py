"""
Tests for the delta calculus on isolated time scales.
"""

import math

import numpy as np
import pytest

from tsvar.calculus import (
    Trajectory,
    commutation_residual,
    delta_derivative,
    delta_integral,
    ibp_battery,
    ibp_residual,
    ibp_terms,
    jackson_derivative,
    mixed_eval,
    nested_delta,
    polynomial,
)
from tsvar.core import ArgumentError, PreconditionError
from tsvar.timescale import TimeScale


def power(scale, n):
    return Trajectory(scale, lambda t: t ** n, f"t^{n}")


class TestDeltaDerivative:
    """Test exact delta derivatives."""

    def test_integer_square(self):
        assert delta_derivative(power(TimeScale.integers(), 2), 3, 1) == pytest.approx(7)

    def test_q_square(self):
        assert delta_derivative(power(TimeScale.q_scale(2.0), 2), 4, 1) == pytest.approx(12)

    def test_integer_cube_second_order(self):
        assert delta_derivative(power(TimeScale.integers(), 3), 0, 2) == pytest.approx(6)

    def test_order_zero(self):
        assert delta_derivative(power(TimeScale.integers(), 2), 5, 0) == 25

    def test_constant_rule(self):
        """(f + c)^Delta = f^Delta and (c f)^Delta = c f^Delta."""
        ts = TimeScale.h_step(0.5)
        f = power(ts, 3)
        shifted = Trajectory(ts, lambda t: t ** 3 + 4.0)
        assert delta_derivative(shifted, 1.5, 1) == pytest.approx(delta_derivative(f, 1.5, 1))
        assert delta_derivative(f * 3.0, 1.5, 2) == pytest.approx(3.0 * delta_derivative(f, 1.5, 2))

    def test_forward_jump_identity(self):
        """f^sigma = f + mu f^Delta."""
        ts = TimeScale.q_scale(3.0)
        f = power(ts, 2)
        for t in ts.grid(1, 5):
            assert f(ts.sigma(t)) == pytest.approx(f(t) + ts.mu(t) * delta_derivative(f, t, 1))

    def test_negative_order(self):
        with pytest.raises(ArgumentError):
            delta_derivative(power(TimeScale.integers(), 2), 0, -1)

    def test_jackson_derivative(self):
        ts = TimeScale.q_scale(2.0)
        assert jackson_derivative(power(ts, 2), 4) == pytest.approx(12)
        with pytest.raises(PreconditionError):
            jackson_derivative(power(TimeScale.integers(), 2), 4)


class TestDeltaIntegral:
    """Test delta integrals as finite sums."""

    def test_integer(self):
        assert delta_integral(power(TimeScale.integers(), 1), 0, 4) == pytest.approx(6)

    def test_q_telescoping(self):
        assert delta_integral(Trajectory(TimeScale.q_scale(2.0), lambda t: 1.0), 1, 16) == pytest.approx(15)

    def test_empty_interval(self):
        assert delta_integral(power(TimeScale.q_scale(2.0), 2), 8, 8) == 0

    def test_reversed_bounds(self):
        f = power(TimeScale.integers(), 1)
        assert delta_integral(f, 4, 0) == pytest.approx(-6)

    def test_fundamental_theorem(self):
        """int_a^b f^Delta = f(b) - f(a)."""
        ts = TimeScale.h_step(0.25)
        f = power(ts, 3)
        derivative = Trajectory(ts, lambda t: delta_derivative(f, t, 1))
        assert delta_integral(derivative, 0.5, 3.0) == pytest.approx(f(3.0) - f(0.5))


class TestMixedEval:
    """Test <x>^r."""

    def test_integer_square(self):
        assert mixed_eval(power(TimeScale.integers(), 2), 3, 1) == pytest.approx((3, 16, 7))

    def test_integer_identity(self):
        assert mixed_eval(power(TimeScale.integers(), 1), 0, 2) == pytest.approx((0, 2, 1, 0))

    def test_q_identity(self):
        assert mixed_eval(power(TimeScale.q_scale(2.0), 1), 1, 2) == pytest.approx((1, 4, 2, 0))

    def test_length(self):
        assert len(mixed_eval(power(TimeScale.integers(), 4), 2, 3)) == 5

    def test_non_affine_needs_condition_h(self):
        ts = TimeScale.from_points([0, 1, 3, 4, 5, 8, 9, 13])
        x = power(ts, 2)
        assert len(mixed_eval(x, 1, 1)) == 3
        with pytest.raises(PreconditionError):
            mixed_eval(x, 1, 2)


class TestCommutation:
    """Test f^{sigma Delta} = a1 f^{Delta sigma}."""

    def test_q_square(self):
        ts = TimeScale.q_scale(2.0)
        for t in ts.grid(1, 6):
            assert commutation_residual(power(ts, 2), t) == pytest.approx(0, abs=1e-9 * (1 + t ** 2))

    @pytest.mark.parametrize("degree", [1, 2, 3, 4])
    def test_integer_polynomials(self, degree):
        ts = TimeScale.integers()
        for t in range(0, 10):
            assert commutation_residual(power(ts, degree), t) == pytest.approx(0, abs=1e-9)

    def test_h_step_exponential(self):
        ts = TimeScale.h_step(0.5)
        assert abs(commutation_residual(Trajectory(ts, math.exp), 0)) <= 1e-12

    def test_affine(self):
        ts = TimeScale.affine(3.0, 2.0, anchor=1.0)
        for t in ts.grid(1, 4):
            assert commutation_residual(power(ts, 3), t) == pytest.approx(0, abs=1e-9 * (1 + t ** 3))

    def test_non_affine(self):
        with pytest.raises(PreconditionError):
            commutation_residual(power(TimeScale.from_points([0, 1, 3, 4, 5]), 2), 1)


class TestIntegrationByParts:
    """Test the higher-order integration by parts formula."""

    def test_q_scale_r3_i2(self):
        ts = TimeScale.q_scale(2.0)
        rng = np.random.default_rng(7)
        f = polynomial(ts, rng.standard_normal(5))
        g = polynomial(ts, rng.standard_normal(5))
        terms = ibp_terms(f, g, 1, 2 ** 8, 3, 2)
        assert abs(terms.residual) <= 1e-9 * max(1.0, terms.magnitude)

    def test_zero_f(self):
        ts = TimeScale.integers()
        f = Trajectory(ts, lambda t: 0.0)
        g = polynomial(ts, [1, 2, 3])
        assert ibp_residual(f, g, 0, 9, 2, 2) == 0

    def test_index_range(self):
        ts = TimeScale.integers()
        f = polynomial(ts, [1, 1])
        with pytest.raises(ArgumentError):
            ibp_residual(f, f, 0, 5, 2, 3)
        with pytest.raises(ArgumentError):
            ibp_residual(f, f, 0, 5, 2, 0)

    def test_non_affine(self):
        ts = TimeScale.from_points([0, 1, 3, 4, 5, 8, 9, 13, 14, 20])
        f = polynomial(ts, [1, 1])
        with pytest.raises(PreconditionError):
            ibp_residual(f, f, 0, 5, 1, 1)

    @pytest.mark.parametrize("scale", [
        TimeScale.integers(),
        TimeScale.h_step(0.5),
        TimeScale.q_scale(2.0),
    ], ids=["integers", "h=0.5", "q=2"])
    def test_random_battery(self, scale):
        report = ibp_battery(scale, orders=(1, 2, 3), pairs=50, seed=0, window=10)
        assert report.cases == 50 * 6
        assert report.max_relative <= 1e-9

    def test_battery_r4(self):
        report = ibp_battery(TimeScale.integers(), orders=(4,), pairs=10, seed=1)
        assert report.max_relative <= 1e-9


class TestTrajectory:
    """Test trajectory arithmetic and memoisation."""

    def test_linear_combination(self):
        ts = TimeScale.integers()
        x = power(ts, 2) * 2.0 - power(ts, 1)
        assert x(3) == pytest.approx(15)
        assert (power(ts, 1) + power(ts, 0))(4) == pytest.approx(5)

    def test_memoised(self):
        calls = []

        def fn(t):
            calls.append(t)
            return t

        x = Trajectory(TimeScale.integers(), fn)
        x(2)
        x(2)
        assert calls == [2.0]

    def test_polynomial(self):
        p = polynomial(TimeScale.integers(), [1, 0, 2])
        assert p(3) == pytest.approx(19)


def relative_scale(*values):
    return max(1.0, *(abs(v) for v in values))


class TestCalculusInvariants:
    """Test linearity, splitting and polynomial exactness on random data."""

    SCALES = [
        TimeScale.integers(),
        TimeScale.h_step(0.5),
        TimeScale.q_scale(2.0),
    ]
    IDS = ["integers", "h=0.5", "q=2"]

    @pytest.mark.parametrize("scale", SCALES, ids=IDS)
    def test_nested_delta_linear(self, scale):
        rng = np.random.default_rng(11)
        for _ in range(20):
            x = polynomial(scale, rng.standard_normal(5))
            y = polynomial(scale, rng.standard_normal(5))
            alpha, beta = rng.standard_normal(2)
            combined = x * alpha + y * beta
            index = int(rng.integers(0, 5))
            order = int(rng.integers(0, 4))
            dx = nested_delta(scale, x.at, index, order)
            dy = nested_delta(scale, y.at, index, order)
            expected = alpha * dx + beta * dy
            actual = nested_delta(scale, combined.at, index, order)
            assert abs(actual - expected) <= 1e-12 * relative_scale(alpha * dx, beta * dy)

    @pytest.mark.parametrize("scale", SCALES, ids=IDS)
    def test_delta_integral_linear(self, scale):
        rng = np.random.default_rng(12)
        points = scale.grid(scale.anchor, 12)
        for _ in range(20):
            x = polynomial(scale, rng.standard_normal(5))
            y = polynomial(scale, rng.standard_normal(5))
            alpha, beta = rng.standard_normal(2)
            start, end = sorted(rng.choice(len(points), 2, replace=False))
            ix = delta_integral(x, points[start], points[end])
            iy = delta_integral(y, points[start], points[end])
            actual = delta_integral(x * alpha + y * beta, points[start], points[end])
            assert abs(actual - alpha * ix - beta * iy) <= 1e-12 * relative_scale(alpha * ix, beta * iy)

    @pytest.mark.parametrize("scale", SCALES, ids=IDS)
    def test_integral_splitting(self, scale):
        rng = np.random.default_rng(13)
        points = scale.grid(scale.anchor, 12)
        for _ in range(20):
            f = polynomial(scale, rng.standard_normal(5))
            a, b, c = (points[i] for i in rng.choice(len(points), 3))
            whole = delta_integral(f, a, c)
            left, right = delta_integral(f, a, b), delta_integral(f, b, c)
            assert abs(left + right - whole) <= 1e-12 * relative_scale(left, right, whole)

    @pytest.mark.parametrize("scale", SCALES, ids=IDS)
    @pytest.mark.parametrize("degree", [1, 2, 3, 4, 5])
    def test_polynomial_exactness(self, scale, degree):
        rng = np.random.default_rng(degree)
        coefficients = rng.integers(-3, 4, degree + 1).astype(float)
        coefficients[-1] = float(rng.integers(1, 4))
        f = polynomial(scale, coefficients)
        top = [nested_delta(scale, f.at, index, degree) for index in range(5)]
        tolerance = 1e-10 * relative_scale(top[0])
        for value in top[1:]:
            assert abs(value - top[0]) <= tolerance
        for index in range(5):
            assert abs(nested_delta(scale, f.at, index, degree + 1)) <= tolerance

    @pytest.mark.parametrize("scale", [
        TimeScale.q_scale(2.0),
        TimeScale.h_step(0.5),
        TimeScale.h_step(0.1),
    ], ids=["q=2", "h=0.5", "h=0.1"])
    def test_commutation_battery(self, scale):
        rng = np.random.default_rng(14)
        a1 = scale.affine_params[0]
        for _ in range(20):
            degree = int(rng.integers(0, 6))
            f = polynomial(scale, rng.standard_normal(degree + 1))
            for t in scale.grid(scale.anchor, 6):
                reference = a1 * delta_derivative(f, scale.sigma(t), 1)
                assert abs(commutation_residual(f, t)) <= 1e-10 * relative_scale(reference)
