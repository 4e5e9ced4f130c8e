"""
Lagrangians and variational problems.

A Lagrangian is L(t, u0, ..., ur) where slot ui receives x^{sigma^{r-i} Delta^i};
partial(i, ...) is therefore the (i+2)-th partial derivative of L.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..calculus import mixed_eval_indices
from ..core import ArgumentError, DomainError, HorizonError, ProblemError
from ..exprlang import Expr, as_expr, compile_expr, differentiate, to_source
from ..timescale import TimeScale, default_horizon, fit_condition_H

logger = logging.getLogger(__name__)

CONDITION_H_TOL = 1e-9
PARTIAL_CHECK_RTOL = 1e-5

LagrangianFunction = Callable[..., float]


def _difference_step(u: float) -> float:
    return 1e-6 * (1.0 + abs(u))


class Lagrangian:
    """
    L(t, u0, ..., ur) together with its partials in the state slots.

    value and the partial callables take positional arguments (t, u0, ..., ur).
    Slots without an analytic partial fall back to a symmetric difference
    with step 1e-6*(1+|ui|).
    """

    def __init__(
        self,
        r: int,
        value: LagrangianFunction,
        partials: Optional[Mapping[int, LagrangianFunction]] = None,
        label: str = "",
    ):
        if r < 1:
            raise ArgumentError(f"Lagrangian order must be positive, got {r}")
        self.r = r
        self._value = value
        self._partials: Dict[int, LagrangianFunction] = dict(partials or {})
        for slot in self._partials:
            if not 0 <= slot <= r:
                raise ArgumentError(f"Partial for slot {slot} outside 0..{r}")
        self.label = label
        self.expression: Optional[Expr] = None
        self.partial_expressions: Dict[int, Expr] = {}

    def __repr__(self) -> str:
        return f"Lagrangian(r={self.r}, {self.label or '<closure>'})"

    @property
    def arity(self) -> int:
        """Number of state slots, r + 1."""
        return self.r + 1

    @property
    def analytic_slots(self) -> Tuple[int, ...]:
        return tuple(sorted(self._partials))

    @classmethod
    def from_expression(
        cls,
        source: str,
        r: int,
        partial_sources: Optional[Mapping[str, str]] = None,
    ) -> "Lagrangian":
        """
        Build a Lagrangian from expression text over t, u0..ur.

        Every slot gets an exact symbolic partial; entries of partial_sources
        (keyed "u0".."ur") replace the derived ones.
        """
        expr = as_expr(source, r)
        names = ["t"] + [f"u{i}" for i in range(r + 1)]
        partial_exprs = {i: differentiate(expr, f"u{i}") for i in range(r + 1)}
        for key, text in (partial_sources or {}).items():
            if key not in names[1:]:
                raise ArgumentError(f"Unknown partial slot {key!r}; expected one of {names[1:]}")
            partial_exprs[int(key[1:])] = as_expr(text, r)

        lagrangian = cls(
            r,
            compile_expr(expr, names),
            {i: compile_expr(e, names) for i, e in partial_exprs.items()},
            label=to_source(expr),
        )
        lagrangian.expression = expr
        lagrangian.partial_expressions = partial_exprs
        return lagrangian

    def value(self, t: float, us: Sequence[float]) -> float:
        return float(self._value(t, *us))

    def partial(self, slot: int, t: float, us: Sequence[float]) -> float:
        """The (slot+2)-th partial derivative of L at (t, us)."""
        if not 0 <= slot <= self.r:
            raise ArgumentError(f"Slot {slot} outside 0..{self.r}")
        analytic = self._partials.get(slot)
        if analytic is not None:
            return float(analytic(t, *us))
        return self.numeric_partial(slot, t, us)

    def numeric_partial(self, slot: int, t: float, us: Sequence[float]) -> float:
        step = _difference_step(us[slot])
        up, down = list(us), list(us)
        up[slot] += step
        down[slot] -= step
        return (self.value(t, up) - self.value(t, down)) / (2.0 * step)

    def scaled(self, factor: float) -> "Lagrangian":
        """factor * L, with partials scaled alike."""
        value = self._value
        partials = {
            slot: (lambda fn: lambda *args: factor * fn(*args))(fn)
            for slot, fn in self._partials.items()
        }
        return Lagrangian(
            self.r,
            lambda *args: factor * value(*args),
            partials,
            label=f"{factor:g}*({self.label or '?'})",
        )

    def check_partials(
        self,
        points: Sequence[Tuple[float, Sequence[float]]],
        rtol: float = PARTIAL_CHECK_RTOL,
    ) -> List[Dict[str, float]]:
        """
        Compare every analytic partial with a symmetric difference at each point.

        Returns the mismatches exceeding rtol*(1 + |analytic|); empty when consistent.
        """
        mismatches = []
        for t, us in points:
            for slot in self.analytic_slots:
                analytic = self.partial(slot, t, us)
                numeric = self.numeric_partial(slot, t, us)
                if abs(analytic - numeric) > rtol * (1.0 + abs(analytic)):
                    mismatches.append({
                        "slot": slot, "t": t, "analytic": analytic, "numeric": numeric,
                    })
        if mismatches:
            logger.warning(f"{len(mismatches)} partial derivative mismatches for {self!r}")
        return mismatches


@dataclass(frozen=True)
class Horizon:
    """Truncation horizon expressed in grid-point indices past the start."""
    T_max_index: int
    T_grid_stride: int
    T_start_index: int = 0

    def __post_init__(self):
        if self.T_max_index < 1:
            raise ArgumentError("T_max_index must be positive")
        if self.T_grid_stride < 1:
            raise ArgumentError("T_grid_stride must be positive")
        if not 0 <= self.T_start_index <= self.T_max_index:
            raise ArgumentError("T_start_index must lie in 0..T_max_index")

    @classmethod
    def default_for(cls, scale: TimeScale) -> "Horizon":
        T_max, stride = default_horizon(scale)
        return cls(T_max_index=T_max, T_grid_stride=stride)


@dataclass
class Problem:
    """
    An infinite-horizon problem of order r on [start, +inf[ of a time scale.

    Orders r >= 2 need condition (H); on affine scales a1 comes from the
    constructor, on point sequences from a fit of the first points.
    """
    scale: TimeScale
    order: int
    initial_conditions: Tuple[float, ...]
    lagrangian: Lagrangian
    horizon: Optional[Horizon] = None
    start: Optional[float] = None
    a1: float = field(init=False)
    start_index: int = field(init=False)

    def __post_init__(self):
        if self.order < 1:
            raise ProblemError(f"Order must be positive, got {self.order}")
        self.initial_conditions = tuple(float(a) for a in self.initial_conditions)
        if len(self.initial_conditions) != self.order:
            raise ProblemError(
                f"Order {self.order} needs exactly {self.order} initial conditions, "
                f"got {len(self.initial_conditions)}"
            )
        if self.lagrangian.r != self.order:
            raise ProblemError(
                f"Lagrangian has {self.lagrangian.arity} slots, order {self.order} needs {self.order + 1}")
        if self.start is None:
            self.start = self.scale.anchor
        try:
            self.start_index = self.scale.index_of(self.start)
        except (DomainError, HorizonError) as e:
            raise ProblemError(f"Start point {self.start} is not on {self.scale!r}: {e}")
        if self.horizon is None:
            self.horizon = Horizon.default_for(self.scale)
        self.a1 = self._condition_h_a1()

    def _condition_h_a1(self) -> float:
        params = self.scale.affine_params
        if params is not None:
            return params[0]
        if self.order == 1:
            return 1.0
        try:
            sample = self.scale.index_grid(self.start_index, 16)
        except HorizonError as e:
            raise ProblemError(f"Cannot check condition (H): {e}")
        fit = fit_condition_H(sample)
        if fit.max_residual > CONDITION_H_TOL:
            raise ProblemError(
                f"Order {self.order} requires condition (H); the scale's forward jump "
                f"deviates from affine by {fit.max_residual:.3e}"
            )
        logger.info(f"Condition (H) fitted on point sequence: a1={fit.a1:.12g}, a0={fit.a0:.12g}")
        return fit.a1

    @property
    def r(self) -> int:
        return self.order

    def index_grid(self, count: int) -> List[int]:
        return [self.start_index + i for i in range(count)]

    def T_grid(self) -> List[float]:
        """Truncation points T at every stride-th index up to T_max."""
        h = self.horizon
        return [
            self.scale.point(self.start_index + i)
            for i in range(h.T_start_index, h.T_max_index + 1, h.T_grid_stride)
        ]

    @property
    def T_max(self) -> float:
        return self.scale.point(self.start_index + self.horizon.T_max_index)


class PathEvaluation:
    """
    L and its partials composed with <x>^r along a trajectory, memoised per index.

    g(i, index) is (partial_{i+2} L)<x>^r at the index-th point.
    """

    def __init__(self, problem: Problem, trajectory):
        self.problem = problem
        self.x = trajectory
        self._slots: Dict[int, Tuple[float, List[float]]] = {}
        self._partials: Dict[Tuple[int, int], float] = {}
        self._values: Dict[int, float] = {}

    def slots(self, index: int) -> Tuple[float, List[float]]:
        entry = self._slots.get(index)
        if entry is None:
            scale = self.problem.scale
            entry = (scale.point(index), mixed_eval_indices(scale, self.x.at, index, self.problem.order))
            self._slots[index] = entry
        return entry

    def value(self, index: int) -> float:
        value = self._values.get(index)
        if value is None:
            t, us = self.slots(index)
            value = self.problem.lagrangian.value(t, us)
            self._values[index] = value
        return value

    def g(self, slot: int, index: int) -> float:
        key = (slot, index)
        value = self._partials.get(key)
        if value is None:
            t, us = self.slots(index)
            value = self.problem.lagrangian.partial(slot, t, us)
            if not math.isfinite(value):
                raise DomainError(f"Non-finite partial in slot {slot} at t={t}")
            self._partials[key] = value
        return value

    def g_function(self, slot: int) -> Callable[[int], float]:
        return lambda index: self.g(slot, index)


def random_interior_points(r: int, count: int, seed: int = 0, low: float = 0.5, high: float = 3.0):
    """Random (t, us) points for partial-derivative diagnostics."""
    rng = np.random.default_rng(seed)
    return [
        (float(rng.uniform(low, high)), [float(u) for u in rng.uniform(-2.0, 2.0, r + 1)])
        for _ in range(count)
    ]
