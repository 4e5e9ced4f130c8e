"""
Tests for the collocation solver.
"""

import numpy as np
import pytest
from scipy.optimize import minimize

from tsvar.core import BasisError, InfeasibilityError
from tsvar.solver import CollocationSolver, SolverTolerances, family_analysis, solve_candidate
from tsvar.exprlang import time_function
from tsvar.timescale import TimeScale
from tsvar.variational import Lagrangian, Problem, Verdict

CUBIC_BASIS = ["t^3", "t^2", "t", "1"]


def example1(scale=None, factor=1.0):
    scale = scale or TimeScale.integers()
    lagrangian = Lagrangian.from_expression("-(u2)^2", 2)
    if factor != 1.0:
        lagrangian = lagrangian.scaled(factor)
    return Problem(scale, 2, (0, 1), lagrangian)


def example2():
    return Problem(TimeScale.q_scale(2.0), 2, (1, 2), Lagrangian.from_expression("-t*(1+u2^2)", 2))


class TestExamples:
    """Test the solver on problems with known extremals."""

    def test_example1(self):
        result = solve_candidate(example1(), CUBIC_BASIS)
        np.testing.assert_allclose(result.coefficients, [0, 0, 1, 0], atol=1e-8)
        assert result.family_dim == 2
        assert result.linear
        assert result.el_residual_norm <= 1e-8
        assert all(s.verdict is Verdict.CONVERGES_TO_ZERO for s in result.transversality_report.values())
        assert result.admissibility == pytest.approx([0, 0], abs=1e-9)

    def test_example2(self):
        result = solve_candidate(example2(), ["t^2", "t", "t*ln(t)", "1"])
        np.testing.assert_allclose(result.coefficients, [0, 2, 0, -1], atol=1e-6)
        assert result.family_dim == 2
        assert all(s.verdict is Verdict.CONVERGES_TO_ZERO for s in result.transversality_report.values())

    def test_pinned_by_initial_conditions(self):
        result = solve_candidate(example1(), ["t", "1"])
        np.testing.assert_allclose(result.coefficients, [1, 0], atol=1e-12)
        assert result.family_dim == 0
        assert result.stage2_cost is None
        assert result.el_residual_norm == pytest.approx(0, abs=1e-12)

    @pytest.mark.parametrize("h", [0.5, 0.1])
    def test_example1_on_h_step(self, h):
        result = solve_candidate(example1(TimeScale.h_step(h)), CUBIC_BASIS)
        np.testing.assert_allclose(result.coefficients, [0, 0, 1, 0], atol=1e-8)
        assert result.family_dim == 2

    def test_lagrangian_rescaling(self):
        plain = solve_candidate(example1(), CUBIC_BASIS)
        scaled = solve_candidate(example1(factor=1000.0), CUBIC_BASIS)
        np.testing.assert_allclose(scaled.coefficients, plain.coefficients, atol=1e-8)
        assert scaled.family_dim == plain.family_dim

    @pytest.mark.parametrize("problem,basis,expected", [
        (example1(), ["t^3", "t^2", "2*t", "1"], [0, 0, 0.5, 0]),
        (example2(), ["t^2", "2*t", "t*ln(t)", "2"], [0, 1, 0, -0.5]),
        (example2(), ["0.5*t^2", "4*t", "2*t*ln(t)", "-1"], [0, 0.5, 0, 1]),
    ], ids=["example1", "example2", "example2-all-scaled"])
    def test_basis_rescaling(self, problem, basis, expected):
        result = solve_candidate(problem, basis)
        np.testing.assert_allclose(result.coefficients, expected, atol=1e-6)
        assert result.family_dim == 2

    def test_callable_basis(self):
        basis = [lambda t: t ** 3, lambda t: t ** 2, lambda t: t, lambda t: 1.0]
        result = solve_candidate(example1(), basis)
        np.testing.assert_allclose(result.coefficients, [0, 0, 1, 0], atol=1e-8)

    def test_collocation_points(self):
        result = solve_candidate(example1(), CUBIC_BASIS, colloc={"points": 12})
        np.testing.assert_allclose(result.coefficients, [0, 0, 1, 0], atol=1e-8)


class TestFiniteHorizonOracle:
    """Compare with brute-force maximisation of the truncated payoff."""

    # along x = t^2 the u1 partial is 8 - t, which vanishes at the horizon
    LAGRANGIAN = "-(u1 - 1.5*t - 5)^2 - (u0 - (t+1)^2 + 0.5)^2"
    HORIZON = 8

    def truncated_payoff(self, lagrangian, nodes):
        x = np.concatenate([[0.0], nodes])
        return sum(lagrangian.value(t, [x[t + 1], x[t + 1] - x[t]]) for t in range(self.HORIZON))

    def test_first_order_free_endpoint(self):
        lagrangian = Lagrangian.from_expression(self.LAGRANGIAN, 1)
        problem = Problem(TimeScale.integers(), 1, (0.0,), lagrangian)
        result = solve_candidate(problem, ["t^2", "t", "1"])
        assert result.family_dim == 0
        np.testing.assert_allclose(result.coefficients, [1, 0, 0], atol=1e-9)
        c = result.coefficients
        candidate = np.array([c[0] * k ** 2 + c[1] * k + c[2] for k in range(1, self.HORIZON + 1)])

        h = 1e-4
        for node in range(self.HORIZON):
            bump = np.zeros(self.HORIZON)
            bump[node] = h
            up = self.truncated_payoff(lagrangian, candidate + bump)
            down = self.truncated_payoff(lagrangian, candidate - bump)
            assert abs((up - down) / (2 * h)) <= 1e-6

        rng = np.random.default_rng(0)
        for _ in range(10):
            start = 10 * rng.standard_normal(self.HORIZON)
            run = minimize(lambda nodes: -self.truncated_payoff(lagrangian, nodes), start,
                           method="BFGS", jac="3-point", options={"gtol": 1e-9})
            np.testing.assert_allclose(run.x, candidate, atol=1e-5)


class TestNonlinear:
    """Test the Gauss-Newton stage."""

    def test_quartic_penalty(self):
        problem = Problem(TimeScale.integers(), 1, (1.0,), Lagrangian.from_expression("-(u1-1)^2 - u1^4", 1))
        result = solve_candidate(problem, ["t^2", "t", "1"])
        assert not result.linear
        c1, c2, c3 = result.coefficients
        assert c1 == pytest.approx(0, abs=1e-6)
        # the slope zeroes the partial in u1: 2c^3 + c - 1 = 0
        assert 2 * c2 ** 3 + c2 - 1 == pytest.approx(0, abs=1e-6)
        assert c3 == pytest.approx(1, abs=1e-9)


class TestBasisChecks:
    """Test basis and feasibility errors."""

    def test_dependent_basis(self):
        with pytest.raises(BasisError):
            solve_candidate(example1(), ["t", "2*t"])

    def test_basis_too_small(self):
        with pytest.raises(BasisError):
            solve_candidate(example1(), ["t"])

    def test_infeasible_initial_conditions(self):
        problem = Problem(TimeScale.integers(), 2, (1, 1), Lagrangian.from_expression("-(u2)^2", 2))
        with pytest.raises(InfeasibilityError):
            solve_candidate(problem, ["t", "t^2"])

    def test_gram_condition_reported(self):
        result = solve_candidate(example1(), CUBIC_BASIS)
        assert np.isfinite(result.ansatz.gram_condition)
        assert result.ansatz.gram_condition >= 1


class TestFamilyAnalysis:
    """Test the null-space description."""

    def test_example1(self):
        family = family_analysis(example1(), CUBIC_BASIS)
        assert family.family_dim == 2
        gram = family.null_basis.T @ family.null_basis
        np.testing.assert_allclose(gram, np.eye(2), atol=1e-10)
        # homogeneous initial conditions: x(0) = 0 and x^Delta(0) = 0
        ic = np.array([[0, 0, 0, 1], [1, 1, 1, 0]])
        np.testing.assert_allclose(ic @ family.null_basis, np.zeros((2, 2)), atol=1e-8)
        assert len(family.directions) == 2

    def test_pinned(self):
        assert family_analysis(example1(), ["t", "1"]).family_dim == 0


class TestDeterminism:
    """Test seeded behaviour."""

    def test_same_seed_same_result(self):
        first = solve_candidate(example1(), CUBIC_BASIS, seed=3)
        second = solve_candidate(example1(), CUBIC_BASIS, seed=3)
        assert first.to_dict() == second.to_dict()

    def test_default_starts(self):
        problem = example1()
        solver = CollocationSolver(problem, [time_function(s) for s in CUBIC_BASIS], CUBIC_BASIS, seed=5)
        starts = solver.default_starts(2)
        assert len(starts) == 7
        assert not starts[0].any()
        again = CollocationSolver(problem, [time_function(s) for s in CUBIC_BASIS], CUBIC_BASIS, seed=5)
        for a, b in zip(starts, again.default_starts(2)):
            np.testing.assert_array_equal(a, b)

    def test_restarts_do_not_change_linear_answer(self):
        problem = example1()
        functions = [time_function(s) for s in CUBIC_BASIS]
        few = CollocationSolver(problem, functions, CUBIC_BASIS, stage2_starts=0).solve()
        many = CollocationSolver(problem, functions, CUBIC_BASIS, stage2_starts=12).solve()
        np.testing.assert_allclose(few.coefficients, many.coefficients, atol=1e-8)

    def test_tolerances(self):
        result = solve_candidate(example1(), CUBIC_BASIS, tolerances=SolverTolerances(zero=1e-9))
        np.testing.assert_allclose(result.coefficients, [0, 0, 1, 0], atol=1e-8)
        assert result.to_dict()["family_dim"] == 2

    def test_restarts_on_example2(self):
        problem = example2()
        sources = ["t^2", "t", "t*ln(t)", "1"]
        functions = [time_function(s) for s in sources]
        results = [
            CollocationSolver(problem, functions, sources, seed=seed, stage2_starts=starts).solve()
            for seed, starts in [(0, 0), (0, 6), (7, 12)]
        ]
        for result in results:
            assert result.stage2_cost is not None
            np.testing.assert_allclose(result.coefficients, [0, 2, 0, -1], atol=1e-6)
        assert results[1].stage2_cost <= results[0].stage2_cost
