"""
Weak Maximality Battery

Falsification test of weak maximality: for every admissible competitor x the
payoff difference Delta(T') = int_a^{T'} [L<x>^r - L<x*>^r] Delta t is scanned
over the truncation grid. A competitor whose scan settles or diverges above
zero is a witness against x*. A clean battery means NotRejected, never
"maximal": any finite family of competitors is incomplete.
"""

import asyncio
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ..calculus import LinearCombination, Trajectory
from ..core import ArgumentError
from .conditions import admissibility_check, is_admissible
from .lagrangian import PathEvaluation, Problem
from .scan import ZERO_RTOL, TruncationScan, Verdict, T_indices_for, scan_indices

logger = logging.getLogger(__name__)

EPSILONS = (0.5, -0.5, 0.1, -0.1, 0.01, -0.01)
BUMP_DEGREES = (0, 1, 2, 3)


class MaximalityVerdict(Enum):
    NOT_REJECTED = "NotRejected"
    REJECTED = "Rejected"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class CompetitorScan:
    label: str
    scan: TruncationScan

    @property
    def tolerance(self) -> float:
        return ZERO_RTOL * (1.0 + self.scan.max_abs_value)

    @property
    def rejects(self) -> bool:
        limit = self.scan.limit_estimate
        return (
            limit is not None
            and limit > self.tolerance
            and self.scan.verdict in (Verdict.DIVERGES, Verdict.CONVERGES_NONZERO)
        )


@dataclass
class MaximalityReport:
    """Per-competitor payoff-difference scans and the overall verdict."""
    verdict: MaximalityVerdict
    scans: List[CompetitorScan]
    witness: Optional[str] = None
    skipped: List[Tuple[str, List[float]]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict.value,
            "witness": self.witness,
            "competitors": {c.label: c.scan.to_dict() for c in self.scans},
            "skipped": [{"label": label, "admissibility": res} for label, res in self.skipped],
        }


def default_perturbations(problem: Problem) -> List[Tuple[str, Callable[[float], float]]]:
    """
    eta(t) = t^m * prod_{i=0}^{r-1} (t - sigma^i(a)) for m = 0..3.

    Each eta vanishes at the first r points, so its first r - 1 delta
    derivatives at a are zero as well.
    """
    scale = problem.scale
    roots = [scale.point(problem.start_index + i) for i in range(problem.order)]

    def bump(m: int) -> Callable[[float], float]:
        def eta(t: float) -> float:
            value = t ** m
            for root in roots:
                value *= t - root
            return value
        return eta

    return [(f"t^{m}*base", bump(m)) for m in BUMP_DEGREES]


def default_competitors(problem: Problem, xstar: Trajectory) -> List[Trajectory]:
    """x* + eps * eta over the default perturbations and eps in {+-0.5, +-0.1, +-0.01}."""
    competitors = []
    for (name, eta), eps in itertools.product(default_perturbations(problem), EPSILONS):
        variation = Trajectory(problem.scale, eta, name)
        competitors.append(LinearCombination(
            problem.scale, [(1.0, xstar), (eps, variation)], label=f"x* + {eps:g}*{name}"))
    return competitors


def _cumulative_payoff(path: PathEvaluation, last: int) -> List[float]:
    """J(T') for T' at indices start..last; J(start) = 0."""
    problem = path.problem
    scale = problem.scale
    totals = [0.0]
    running = 0.0
    for k in range(problem.start_index, last):
        running += path.value(k) * (scale.point(k + 1) - scale.point(k))
        totals.append(running)
    return totals


def payoff_difference_scan(
    problem: Problem,
    xstar_payoff: Sequence[float],
    competitor: Trajectory,
    T_indices: Sequence[int],
    last: int,
    label: str = "",
) -> TruncationScan:
    payoff = _cumulative_payoff(PathEvaluation(problem, competitor), last)
    start = problem.start_index
    return scan_indices(
        problem.scale,
        lambda j: payoff[j - start] - xstar_payoff[j - start],
        T_indices,
        last,
        label=label,
    )


def overall_verdict(scans: Sequence[CompetitorScan]) -> Tuple[MaximalityVerdict, Optional[str]]:
    if not scans:
        return MaximalityVerdict.INCONCLUSIVE, None
    for competitor in scans:
        if competitor.rejects:
            return MaximalityVerdict.REJECTED, competitor.label
    if all(
        c.scan.limit_estimate is not None and c.scan.limit_estimate <= c.tolerance
        for c in scans
    ):
        return MaximalityVerdict.NOT_REJECTED, None
    return MaximalityVerdict.INCONCLUSIVE, None


class WeakMaximalityBattery:
    """Runs the competitor scans concurrently and joins them into one report."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}
        self.logger = logging.getLogger(__name__)

    async def run(
        self,
        problem: Problem,
        xstar: Trajectory,
        competitors: Optional[Sequence[Trajectory]] = None,
        T_grid: Optional[Sequence[float]] = None,
    ) -> MaximalityReport:
        if competitors is None:
            competitors = default_competitors(problem, xstar)
        T_indices = T_indices_for(problem, T_grid)
        last = max(problem.start_index + problem.horizon.T_max_index, T_indices[-1] if T_indices else 0)
        self.logger.info(f"Weak-maximality battery: {len(competitors)} competitors up to index {last}")

        admissible, skipped = [], []
        for x in competitors:
            if is_admissible(problem, x):
                admissible.append(x)
            else:
                residuals = admissibility_check(problem, x)
                self.logger.warning(f"Skipping inadmissible competitor {x.label or x!r}: {residuals}")
                skipped.append((x.label or repr(x), residuals))

        star_payoff = _cumulative_payoff(PathEvaluation(problem, xstar), last)
        tasks = [
            asyncio.to_thread(
                payoff_difference_scan, problem, star_payoff, x, T_indices, last, x.label or f"competitor {i}")
            for i, x in enumerate(admissible)
        ]
        scans = await asyncio.gather(*tasks)
        results = [CompetitorScan(scan.label, scan) for scan in scans]
        verdict, witness = overall_verdict(results)
        self.logger.info(f"Weak-maximality verdict: {verdict.value}" + (f" (witness {witness})" if witness else ""))
        return MaximalityReport(verdict=verdict, scans=results, witness=witness, skipped=skipped)


def weak_maximality_test(
    problem: Problem,
    xstar: Trajectory,
    competitors: Optional[Sequence[Trajectory]] = None,
    T_grid: Optional[Sequence[float]] = None,
) -> MaximalityReport:
    """Synchronous entry point; competitors default to x* plus the default perturbations."""
    return asyncio.run(WeakMaximalityBattery().run(problem, xstar, competitors, T_grid))


def variation_quotient(problem: Problem, xstar: Trajectory, eta: Trajectory, epsilon: float, Tprime: float) -> float:
    """A(eps, T') = int_a^{T'} (L<x* + eps*eta> - L<x*>) / eps Delta t."""
    if epsilon == 0:
        raise ArgumentError("epsilon must be nonzero")
    last = problem.scale.index_of(Tprime)
    varied = LinearCombination(problem.scale, [(1.0, xstar), (epsilon, eta)])
    difference = (
        _cumulative_payoff(PathEvaluation(problem, varied), last)[-1]
        - _cumulative_payoff(PathEvaluation(problem, xstar), last)[-1]
    )
    return difference / epsilon


def variation_scan(
    problem: Problem,
    xstar: Trajectory,
    eta: Trajectory,
    epsilon: float,
    T_grid: Optional[Sequence[float]] = None,
) -> TruncationScan:
    """V(eps, T) = inf_{T' >= T} A(eps, T') over the truncation grid."""
    if epsilon == 0:
        raise ArgumentError("epsilon must be nonzero")
    T_indices = T_indices_for(problem, T_grid)
    last = max(problem.start_index + problem.horizon.T_max_index, T_indices[-1])
    varied = LinearCombination(problem.scale, [(1.0, xstar), (epsilon, eta)])
    star = _cumulative_payoff(PathEvaluation(problem, xstar), last)
    moved = _cumulative_payoff(PathEvaluation(problem, varied), last)
    start = problem.start_index
    return scan_indices(
        problem.scale,
        lambda j: (moved[j - start] - star[j - start]) / epsilon,
        T_indices,
        last,
        label=f"V(eps={epsilon:g})",
    )
