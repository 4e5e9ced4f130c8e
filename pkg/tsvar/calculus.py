"""
Delta Calculus

Exact delta derivatives and delta integrals on isolated time scales, the
mixed sigma/delta evaluation <x>^r, and runtime checks of the commutation
lemma and the higher-order integration by parts formula.

All computations run on point indices of the scale: f^Delta(t_k) is the
quotient (f(t_{k+1}) - f(t_k)) / (t_{k+1} - t_k), iterated as a difference
table, and the integral over [t_i, t_j[ is the finite sum of f(t_k) mu(t_k).
"""

import logging
import math
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .core import ArgumentError, PreconditionError
from .timescale import ScaleKind, TimeScale

logger = logging.getLogger(__name__)

IndexFunction = Callable[[int], float]

# |exponent * ln(a1)| above this switches powers of 1/a1 to log space
LOG_SPACE_THRESHOLD = 600.0


class Trajectory:
    """
    A scalar function on a time scale.

    The wrapped callable must be pure: it is evaluated concurrently and its
    values are memoised per scale index. Well-definedness at every point an
    operation touches is the caller's obligation; smoothness classes are not
    checked.
    """

    def __init__(self, scale: TimeScale, fn: Callable[[float], float], label: str = ""):
        self.scale = scale
        self._fn = fn
        self.label = label
        self._memo: Dict[int, float] = {}

    def __call__(self, t: float) -> float:
        return self.at(self.scale.index_of(t))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label or '<closure>'} on {self.scale!r})"

    def at(self, index: int) -> float:
        """Value at the index-th point of the scale."""
        value = self._memo.get(index)
        if value is None:
            value = float(self._evaluate_index(index))
            self._memo[index] = value
        return value

    def _evaluate_index(self, index: int) -> float:
        return self._fn(self.scale.point(index))

    def __add__(self, other: "Trajectory") -> "Trajectory":
        return LinearCombination(self.scale, [(1.0, self), (1.0, other)])

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return LinearCombination(self.scale, [(1.0, self), (-1.0, other)])

    def __mul__(self, factor: float) -> "Trajectory":
        return LinearCombination(self.scale, [(float(factor), self)])

    __rmul__ = __mul__


class LinearCombination(Trajectory):
    """Sum of weighted trajectories on a shared scale."""

    def __init__(self, scale: TimeScale, terms: Sequence[Tuple[float, Trajectory]], label: str = ""):
        super().__init__(scale, lambda t: 0.0, label or " + ".join(
            f"{w:g}*({tr.label or '?'})" for w, tr in terms))
        self.terms = list(terms)

    def _evaluate_index(self, index: int) -> float:
        return math.fsum(w * tr.at(index) for w, tr in self.terms)


class BasisTable:
    """Memoised values of a function basis on the points of a scale."""

    def __init__(self, scale: TimeScale, basis: Sequence[Callable[[float], float]]):
        self.scale = scale
        self.basis = list(basis)
        self._rows: Dict[int, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.basis)

    def row(self, index: int) -> np.ndarray:
        row = self._rows.get(index)
        if row is None:
            t = self.scale.point(index)
            row = np.array([float(phi(t)) for phi in self.basis])
            self._rows[index] = row
        return row

    def matrix(self, indices: Sequence[int]) -> np.ndarray:
        return np.vstack([self.row(i) for i in indices])


class BasisTrajectory(Trajectory):
    """A trajectory given as sum_j c_j * phi_j(t); values are exact linear combinations."""

    def __init__(self, table: BasisTable, coefficients: Sequence[float], label: str = ""):
        self.table = table
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.shape != (len(table),):
            raise ArgumentError(
                f"Expected {len(table)} coefficients, got {self.coefficients.shape}")
        super().__init__(table.scale, lambda t: 0.0, label)

    def _evaluate_index(self, index: int) -> float:
        return float(self.table.row(index) @ self.coefficients)


def nested_delta(scale: TimeScale, values: IndexFunction, index: int, order: int) -> float:
    """
    order-th delta derivative at the index-th point of a function given on indices.

    Uses the points index, ..., index + order; exact on isolated scales.
    """
    if order < 0:
        raise ArgumentError(f"Derivative order must be nonnegative, got {order}")
    table = [values(index + j) for j in range(order + 1)]
    if order == 0:
        return table[0]
    points = [scale.point(index + j) for j in range(order + 1)]
    for level in range(order):
        table = [
            (table[j + 1] - table[j]) / (points[j + 1] - points[j])
            for j in range(order - level)
        ]
    return table[0]


def shifted(values: IndexFunction, shift: int) -> IndexFunction:
    """f o sigma^shift on indices."""
    if shift == 0:
        return values
    return lambda index: values(index + shift)


def inverse_power(a1: float, exponent: float) -> float:
    """(1/a1)**exponent, evaluated through logarithms when a direct power would overflow."""
    if a1 <= 0:
        raise ArgumentError(f"a1 must be positive, got {a1}")
    log_magnitude = exponent * math.log(a1)
    if abs(log_magnitude) > LOG_SPACE_THRESHOLD:
        return math.exp(-log_magnitude)
    return (1.0 / a1) ** exponent


def delta_derivative(x: Trajectory, t: float, order: int) -> float:
    """x^{Delta^order}(t); order 0 returns x(t)."""
    return nested_delta(x.scale, x.at, x.scale.index_of(t), order)


def jackson_derivative(x: Trajectory, t: float, order: int = 1) -> float:
    """D_q^order[x](t) on a q-scale, where it coincides with the delta derivative."""
    if x.scale.kind is not ScaleKind.Q_SCALE:
        raise PreconditionError("The Jackson derivative is defined on q-scales only")
    return delta_derivative(x, t, order)


def delta_integral_indices(scale: TimeScale, values: IndexFunction, first: int, last: int) -> float:
    """Sum of f(t_k) mu(t_k) for first <= k < last."""
    return math.fsum(
        values(k) * (scale.point(k + 1) - scale.point(k)) for k in range(first, last)
    )


def delta_integral(f: Trajectory, start: float, end: float) -> float:
    """Delta integral of f over [start, end[; reversed bounds flip the sign."""
    scale = f.scale
    first, last = scale.index_of(start), scale.index_of(end)
    if first > last:
        return -delta_integral_indices(scale, f.at, last, first)
    return delta_integral_indices(scale, f.at, first, last)


def mixed_component(scale: TimeScale, values: IndexFunction, index: int, r: int, i: int) -> float:
    """x^{sigma^{r-i} Delta^i} at an index: shift by r-i points, then differentiate i times."""
    return nested_delta(scale, shifted(values, r - i), index, i)


def require_condition_h(scale: TimeScale, r: int) -> Tuple[float, float]:
    """(a1, a0) of the scale; raises when r >= 2 and condition (H) is unavailable."""
    params = scale.affine_params
    if params is None:
        if r >= 2:
            raise PreconditionError(
                f"Order r={r} needs condition (H); {scale!r} is not affine")
        return (1.0, 0.0)
    return params


def mixed_eval_indices(scale: TimeScale, values: IndexFunction, index: int, r: int) -> List[float]:
    """Components of <x>^r without the time slot: u_0 .. u_r."""
    return [mixed_component(scale, values, index, r, i) for i in range(r + 1)]


def mixed_eval(x: Trajectory, t: float, r: int) -> Tuple[float, ...]:
    """
    <x>^r(t) = (t, x^{sigma^r}(t), x^{sigma^{r-1}Delta}(t), ..., x^{Delta^r}(t)).

    Component i after t is x^{sigma^{r-i}Delta^i}(t).
    """
    if r < 1:
        raise ArgumentError(f"r must be positive, got {r}")
    require_condition_h(x.scale, r)
    index = x.scale.index_of(t)
    return (x.scale.point(index), *mixed_eval_indices(x.scale, x.at, index, r))


def commutation_residual(x: Trajectory, t: float) -> float:
    """f^{sigma Delta}(t) - a1 f^{Delta sigma}(t); zero up to rounding under (H)."""
    params = x.scale.affine_params
    if params is None:
        raise PreconditionError("The commutation identity needs an affine scale")
    a1 = params[0]
    index = x.scale.index_of(t)
    sigma_delta = nested_delta(x.scale, shifted(x.at, 1), index, 1)
    delta_sigma = nested_delta(x.scale, x.at, index + 1, 1)
    return sigma_delta - a1 * delta_sigma


class IbpTerms(NamedTuple):
    """Both sides of the higher-order integration by parts formula."""
    lhs: float
    boundary: float
    remainder: float

    @property
    def residual(self) -> float:
        return self.lhs - self.boundary - self.remainder

    @property
    def magnitude(self) -> float:
        return max(abs(self.lhs), abs(self.boundary), abs(self.remainder))


def ibp_terms(f: Trajectory, g: Trajectory, start: float, end: float, r: int, i: int) -> IbpTerms:
    """
    Evaluate both sides of

        int f g^{sigma^{r-i}Delta^i} = [f g^{sigma^{r-i}Delta^{i-1}}
            + sum_{k=1}^{i-1} (-1)^k f^{Delta^k} g^{sigma^{r-i+k}Delta^{i-1-k}}
              prod_{j=1}^{k} (1/a1)^{i-j}]_start^end
            + (-1)^i (1/a1)^{i(i-1)/2} int f^{Delta^i} g^{sigma^r}
    """
    if r < 1:
        raise ArgumentError(f"r must be positive, got {r}")
    if not 1 <= i <= r:
        raise ArgumentError(f"i must lie in 1..{r}, got {i}")
    scale = f.scale
    params = scale.affine_params
    if params is None:
        raise PreconditionError("Integration by parts of order r needs condition (H)")
    a1 = params[0]
    first, last = scale.index_of(start), scale.index_of(end)
    if first > last:
        raise ArgumentError("start must not exceed end")

    def g_component(index: int, shift: int, order: int) -> float:
        return nested_delta(scale, shifted(g.at, shift), index, order)

    lhs = delta_integral_indices(
        scale, lambda k: f.at(k) * g_component(k, r - i, i), first, last)

    def bracket(index: int) -> float:
        total = f.at(index) * g_component(index, r - i, i - 1)
        for k in range(1, i):
            weight = inverse_power(a1, sum(i - j for j in range(1, k + 1)))
            total += ((-1) ** k) * nested_delta(scale, f.at, index, k) \
                * g_component(index, r - i + k, i - 1 - k) * weight
        return total

    boundary = bracket(last) - bracket(first)
    coefficient = ((-1) ** i) * inverse_power(a1, i * (i - 1) // 2)
    remainder = coefficient * delta_integral_indices(
        scale, lambda k: nested_delta(scale, f.at, k, i) * g.at(k + r), first, last)
    return IbpTerms(lhs=lhs, boundary=boundary, remainder=remainder)


def ibp_residual(f: Trajectory, g: Trajectory, start: float, end: float, r: int, i: int) -> float:
    """LHS minus RHS of the higher-order integration by parts formula."""
    return ibp_terms(f, g, start, end, r, i).residual


class IbpBatteryReport(NamedTuple):
    max_relative: float
    cases: int
    worst: Optional[Tuple[int, int]]


def ibp_battery(
    scale: TimeScale,
    orders: Sequence[int] = (1, 2, 3),
    pairs: int = 50,
    seed: int = 0,
    window: int = 10,
    degree: int = 4,
) -> IbpBatteryReport:
    """
    Integration by parts on random polynomial pairs over a window of the scale.

    Each residual is taken relative to max(1, magnitude of the largest side).
    worst holds the (r, i) of the largest relative residual.
    """
    if window < 2:
        raise ArgumentError(f"window needs at least 2 points, got {window}")
    rng = np.random.default_rng(seed)
    start, end = scale.point(0), scale.point(window - 1)
    worst_value, worst, cases = 0.0, None, 0
    for _ in range(pairs):
        f = polynomial(scale, rng.standard_normal(int(rng.integers(0, degree + 1)) + 1))
        g = polynomial(scale, rng.standard_normal(int(rng.integers(0, degree + 1)) + 1))
        for r in orders:
            for i in range(1, r + 1):
                terms = ibp_terms(f, g, start, end, r, i)
                relative = abs(terms.residual) / max(1.0, terms.magnitude)
                cases += 1
                if relative > worst_value or worst is None:
                    worst_value, worst = relative, (r, i)
    logger.info(f"IBP battery on {scale!r}: {cases} cases, max relative residual {worst_value:.3e}")
    return IbpBatteryReport(max_relative=worst_value, cases=cases, worst=worst)


def polynomial(scale: TimeScale, coefficients: Sequence[float], label: Optional[str] = None) -> Trajectory:
    """Trajectory t -> sum_k coefficients[k] t^k."""
    coeffs = [float(c) for c in coefficients]

    def fn(t: float) -> float:
        value = 0.0
        for c in reversed(coeffs):
            value = value * t + c
        return value

    return Trajectory(scale, fn, label or f"poly{tuple(coeffs)}")
