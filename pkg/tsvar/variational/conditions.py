"""
Necessary optimality conditions along a trajectory.

Euler-Lagrange residuals and the r transversality expressions of an
infinite-horizon problem, the coefficients that weight them, and the
hard-coded low-order forms used to cross-check the generic expansion.

These are necessary conditions applied heuristically: passing them makes a
trajectory a candidate, never a proven maximiser.
"""

import logging
import math
from typing import Callable, Dict, List

from ..calculus import Trajectory, delta_integral_indices, inverse_power, nested_delta, shifted
from ..core import ArgumentError
from .lagrangian import PathEvaluation, Problem

logger = logging.getLogger(__name__)

ADMISSIBILITY_TOL = 1e-9


def admissibility_check(problem: Problem, x: Trajectory) -> List[float]:
    """Residuals x^{Delta^i}(a) - alpha_i for i = 0..r-1."""
    a = problem.start_index
    return [
        nested_delta(problem.scale, x.at, a, i) - alpha
        for i, alpha in enumerate(problem.initial_conditions)
    ]


def is_admissible(problem: Problem, x: Trajectory, tol: float = ADMISSIBILITY_TOL) -> bool:
    return all(abs(res) <= tol for res in admissibility_check(problem, x))


def el_coefficient(i: int, a1: float) -> float:
    """(-1)^i (1/a1)^{i(i-1)/2}."""
    if i < 0:
        raise ArgumentError(f"i must be nonnegative, got {i}")
    if a1 <= 0:
        raise ArgumentError(f"a1 must be positive, got {a1}")
    return (-1.0) ** i * inverse_power(a1, i * (i - 1) // 2)


def psi(i: int, r: int, k: int, a1: float) -> float:
    """prod_{j=1}^{i} (1/a1)^{r-(k-1)+(j-1)}."""
    if r < 1:
        raise ArgumentError(f"r must be positive, got {r}")
    if not 1 <= k <= r:
        raise ArgumentError(f"k must lie in 1..{r}, got {k}")
    if not 1 <= i <= k - 1:
        raise ArgumentError(f"i must lie in 1..{k - 1}, got {i}")
    if a1 <= 0:
        raise ArgumentError(f"a1 must be positive, got {a1}")
    return inverse_power(a1, i * (r - k) + i * (i + 1) // 2)


def el_residual_at(path: PathEvaluation, index: int) -> float:
    problem = path.problem
    scale = problem.scale
    return math.fsum(
        el_coefficient(i, problem.a1) * nested_delta(scale, path.g_function(i), index, i)
        for i in range(problem.order + 1)
    )


def el_residual(problem: Problem, x: Trajectory, t: float) -> float:
    """
    sum_{i=0}^{r} (-1)^i (1/a1)^{i(i-1)/2} (partial_{i+2} L)^{Delta^i} <x>^r (t).

    Touches the points up to sigma^{2r}(t).
    """
    return el_residual_at(PathEvaluation(problem, x), problem.scale.index_of(t))


def el_residuals(problem: Problem, x: Trajectory, count: int) -> List[float]:
    """E-L residuals at the first count points from the start."""
    path = PathEvaluation(problem, x)
    return [el_residual_at(path, index) for index in problem.index_grid(count)]


def transversality_value_at(path: PathEvaluation, k: int, index: int) -> float:
    problem = path.problem
    r = problem.order
    if not 1 <= k <= r:
        raise ArgumentError(f"k must lie in 1..{r}, got {k}")
    scale = problem.scale
    first = r - k + 1
    bracket = math.fsum(
        [path.g(first, index)]
        + [
            (-1.0) ** i * nested_delta(scale, path.g_function(first + i), index, i) * psi(i, r, k, problem.a1)
            for i in range(1, k)
        ]
    )
    factor = nested_delta(scale, shifted(path.x.at, k - 1), index, r - k)
    return bracket * factor


def transversality_value(problem: Problem, x: Trajectory, k: int, Tprime: float) -> float:
    """
    k-th transversality expression at T':

        (partial_{r+2-(k-1)} L + sum_{i=1}^{k-1} (-1)^i (partial_{r+2-(k-1)+i} L)^{Delta^i} Psi_i^r(k))
            * x^{sigma^{k-1} Delta^{r-k}}(T')
    """
    return transversality_value_at(PathEvaluation(problem, x), k, problem.scale.index_of(Tprime))


def truncated_payoff_at(path: PathEvaluation, last: int) -> float:
    problem = path.problem
    return delta_integral_indices(problem.scale, path.value, problem.start_index, last)


def truncated_payoff(problem: Problem, x: Trajectory, Tprime: float) -> float:
    """int_a^{T'} L<x>^r(t) Delta t."""
    return truncated_payoff_at(PathEvaluation(problem, x), problem.scale.index_of(Tprime))


# -- explicit low-order forms -----------------------------------------------

def _corollary_terms(problem: Problem, x: Trajectory, t: float):
    if problem.order not in (1, 2, 3):
        raise ArgumentError(f"Explicit forms exist for r = 1, 2, 3 only, got {problem.order}")
    path = PathEvaluation(problem, x)
    scale = problem.scale
    index = scale.index_of(t)

    def d(slot: int, order: int) -> float:
        return nested_delta(scale, path.g_function(slot), index, order)

    def x_component(shift: int, order: int) -> float:
        return nested_delta(scale, shifted(x.at, shift), index, order)

    return d, x_component, 1.0 / problem.a1


def corollary_el_residual(problem: Problem, x: Trajectory, t: float) -> float:
    """The Euler-Lagrange equation written out by hand for r = 1, 2, 3."""
    d, _, b = _corollary_terms(problem, x, t)
    if problem.order == 1:
        return d(0, 0) - d(1, 1)
    if problem.order == 2:
        return d(0, 0) - d(1, 1) + b * d(2, 2)
    return d(0, 0) - d(1, 1) + b * d(2, 2) - b ** 3 * d(3, 3)


def corollary_transversality_value(problem: Problem, x: Trajectory, k: int, Tprime: float) -> float:
    """The transversality conditions written out by hand for r = 1, 2, 3."""
    d, xc, b = _corollary_terms(problem, x, Tprime)
    forms: Dict[int, Dict[int, Callable[[], float]]] = {
        1: {
            1: lambda: d(1, 0) * xc(0, 0),
        },
        2: {
            1: lambda: d(2, 0) * xc(0, 1),
            2: lambda: (d(1, 0) - b * d(2, 1)) * xc(1, 0),
        },
        3: {
            1: lambda: d(3, 0) * xc(0, 2),
            2: lambda: (d(2, 0) - b ** 2 * d(3, 1)) * xc(1, 1),
            3: lambda: (d(1, 0) - b * d(2, 1) + b ** 3 * d(3, 2)) * xc(2, 0),
        },
    }[problem.order]
    if k not in forms:
        raise ArgumentError(f"k must lie in 1..{problem.order}, got {k}")
    return forms[k]()
