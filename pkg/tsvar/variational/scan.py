"""
Truncated-horizon scans.

lim_{T -> inf} inf_{T' >= T} of a quantity is approximated by the infimum over
the sampled scale points T' in [T, T_max] for every T of a truncation grid,
and the tail of those infima is classified into a verdict.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence

from ..calculus import Trajectory
from ..core import ArgumentError
from ..timescale import TimeScale
from .conditions import transversality_value_at
from .lagrangian import PathEvaluation, Problem

logger = logging.getLogger(__name__)

ZERO_RTOL = 1e-7
NONZERO_RTOL = 1e-3
DIVERGENCE_FACTOR = 10.0
TAIL = 3

CSV_HEADER = ("T", "inf_value", "argmin_Tprime")


class Verdict(Enum):
    """Classification of the tail of a scan."""
    CONVERGES_TO_ZERO = "ConvergesToZero"
    CONVERGES_NONZERO = "ConvergesNonzero"
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class TruncationScan:
    """inf over T' in [T, T_max] of a scanned quantity, for each T of a grid."""
    T_values: List[float]
    inf_values: List[float]
    argmin_Tprime: List[float]
    verdict: Verdict
    limit_estimate: Optional[float]
    T_max: float
    values_at_T: List[float] = field(default_factory=list)
    label: str = ""

    @property
    def boundary(self) -> bool:
        """True when the last infimum is attained at T_max, a divergence symptom."""
        return bool(self.argmin_Tprime) and self.argmin_Tprime[-1] == self.T_max

    @property
    def max_abs_value(self) -> float:
        return max((abs(v) for v in self.values_at_T + self.inf_values), default=0.0)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in zip(self.T_values, self.inf_values, self.argmin_Tprime):
            writer.writerow([repr(float(v)) for v in row])
        return buffer.getvalue()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "T_values": list(self.T_values),
            "inf_values": list(self.inf_values),
            "argmin_Tprime": list(self.argmin_Tprime),
            "T_max": self.T_max,
            "boundary": self.boundary,
            "verdict": self.verdict.value,
            "limit_estimate": _json_number(self.limit_estimate),
        }


def _json_number(value: Optional[float]) -> Any:
    if value is None or math.isfinite(value):
        return value
    return "+inf" if value > 0 else "-inf"


def _grows(magnitudes: Sequence[float], tol: float) -> bool:
    if len(magnitudes) < TAIL:
        return False
    a, b, c = magnitudes[-3:]
    if not (a <= b <= c) or (c - b) < (b - a) * (1 - 1e-12):
        return False
    return c > tol and c >= DIVERGENCE_FACTOR * magnitudes[0]


def classify(
    inf_values: Sequence[float],
    argmins: Sequence[float],
    values_at_T: Sequence[float],
    T_max: float,
    max_abs_value: float,
):
    """
    Verdict and limit estimate for the tail of a scan.

    Zero when the last infima are within 1e-7*(1 + max|value|) of 0. Divergence
    when |inf| grows by a factor of 10 across the grid and keeps growing with
    non-shrinking steps over the last three entries; when the last infima sit
    at T_max the sampled values at T are judged instead. Nonzero convergence
    when the last three infima agree to 1e-3 relative.
    """
    tol_zero = ZERO_RTOL * (1.0 + max_abs_value)
    tail = list(inf_values[-TAIL:])
    if all(abs(v) <= tol_zero for v in tail):
        return Verdict.CONVERGES_TO_ZERO, 0.0

    if _grows([abs(v) for v in inf_values], tol_zero):
        return Verdict.DIVERGES, math.copysign(math.inf, inf_values[-1])
    at_boundary = len(argmins) >= TAIL and all(a == T_max for a in argmins[-TAIL:])
    if at_boundary and _grows([abs(v) for v in values_at_T], tol_zero):
        return Verdict.DIVERGES, math.copysign(math.inf, values_at_T[-1])

    last = tail[-1]
    if len(tail) == TAIL and max(tail) - min(tail) <= NONZERO_RTOL * (1.0 + abs(last)):
        return Verdict.CONVERGES_NONZERO, last
    return Verdict.INCONCLUSIVE, last


def scan_indices(
    scale: TimeScale,
    value_at: Callable[[int], float],
    T_indices: Sequence[int],
    last_index: int,
    label: str = "",
) -> TruncationScan:
    """
    Scan value_at over the indices [T_indices[0], last_index].

    Ties between equal infima resolve to the smallest T'.
    """
    if not T_indices:
        raise ArgumentError("T grid is empty")
    if any(b <= a for a, b in zip(T_indices, T_indices[1:])):
        raise ArgumentError("T grid must be strictly increasing")
    last_index = max(last_index, T_indices[-1])
    first = T_indices[0]

    values = [value_at(j) for j in range(first, last_index + 1)]
    suffix_min = [0.0] * len(values)
    suffix_arg = [0] * len(values)
    best, best_at = math.inf, last_index
    for offset in range(len(values) - 1, -1, -1):
        if values[offset] <= best:
            best, best_at = values[offset], first + offset
        suffix_min[offset], suffix_arg[offset] = best, best_at

    inf_values = [suffix_min[T - first] for T in T_indices]
    argmins = [scale.point(suffix_arg[T - first]) for T in T_indices]
    values_at_T = [values[T - first] for T in T_indices]
    T_max = scale.point(last_index)
    max_abs = max(abs(v) for v in values)

    verdict, limit = classify(inf_values, argmins, values_at_T, T_max, max_abs)
    scan = TruncationScan(
        T_values=[scale.point(T) for T in T_indices],
        inf_values=inf_values,
        argmin_Tprime=argmins,
        verdict=verdict,
        limit_estimate=limit,
        T_max=T_max,
        values_at_T=values_at_T,
        label=label,
    )
    if scan.boundary and verdict is not Verdict.CONVERGES_TO_ZERO:
        logger.warning(f"Scan {label or '<unnamed>'}: infimum attained at the horizon T_max={T_max}")
    return scan


def T_indices_for(problem: Problem, T_grid: Optional[Sequence[float]]) -> List[int]:
    if T_grid is None:
        T_grid = problem.T_grid()
    return [problem.scale.index_of(T) for T in T_grid]


def transversality_scan(
    problem: Problem,
    x: Trajectory,
    k: int,
    T_grid: Optional[Sequence[float]] = None,
) -> TruncationScan:
    """Scan of the k-th transversality expression; T_grid defaults to the problem's horizon."""
    indices = T_indices_for(problem, T_grid)
    path = PathEvaluation(problem, x)
    last = problem.start_index + problem.horizon.T_max_index
    logger.info(f"Transversality scan k={k} over {len(indices)} truncation points")
    return scan_indices(
        problem.scale,
        lambda j: transversality_value_at(path, k, j),
        indices,
        last,
        label=f"transversality k={k}",
    )
