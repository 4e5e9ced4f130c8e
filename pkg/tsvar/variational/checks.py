"""
Candidate Checks

Result records and the individual checks a candidate trajectory goes
through: admissibility, the Euler-Lagrange equation on the horizon grid,
each transversality condition and, optionally, the weak-maximality battery.
"""

import asyncio
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

from ..calculus import Trajectory
from .conditions import ADMISSIBILITY_TOL, admissibility_check, el_residuals
from .lagrangian import PathEvaluation, Problem
from .maximality import MaximalityVerdict, WeakMaximalityBattery
from .scan import Verdict, transversality_scan

EL_RTOL = 1e-8


class CheckStatus(Enum):
    """Status of a candidate check."""
    PASSED = "passed"
    WARNING = "warning"
    FAILED = "failed"
    ERROR = "error"


@dataclass
class CheckResult:
    """Result of a single check."""
    name: str
    status: CheckStatus
    message: str
    details: Dict[str, Any] = field(default_factory=dict)
    execution_time_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status in (CheckStatus.PASSED, CheckStatus.WARNING)

    def to_dict(self) -> Dict[str, Any]:
        # timing is left out so reports stay byte-stable
        return {
            "name": self.name,
            "status": self.status.value,
            "message": self.message,
            "details": self.details,
        }


class BaseCheck(ABC):
    """Base class for candidate checks."""

    name = "check"

    async def run(self, problem: Problem, x: Trajectory) -> CheckResult:
        started = time.perf_counter()
        result = await self.evaluate(problem, x)
        result.execution_time_ms = (time.perf_counter() - started) * 1000.0
        return result

    @abstractmethod
    async def evaluate(self, problem: Problem, x: Trajectory) -> CheckResult:
        pass


class AdmissibilityCheck(BaseCheck):
    name = "admissibility"

    async def evaluate(self, problem: Problem, x: Trajectory) -> CheckResult:
        residuals = admissibility_check(problem, x)
        worst = max(abs(r) for r in residuals)
        status = CheckStatus.PASSED if worst <= ADMISSIBILITY_TOL else CheckStatus.FAILED
        return CheckResult(
            self.name, status,
            f"max |x^(Delta^i)(a) - alpha_i| = {worst:.3e}",
            {"residuals": residuals},
        )


class EulerLagrangeCheck(BaseCheck):
    """E-L residual at every grid point from a up to T_max."""

    name = "euler_lagrange"

    def __init__(self, count: Optional[int] = None):
        self.count = count

    async def evaluate(self, problem: Problem, x: Trajectory) -> CheckResult:
        count = self.count or problem.horizon.T_max_index + 1
        residuals = await asyncio.to_thread(el_residuals, problem, x, count)
        path = PathEvaluation(problem, x)
        lagrangian_scale = max(abs(path.value(i)) for i in problem.index_grid(count))
        tolerance = EL_RTOL * (1.0 + lagrangian_scale)
        worst = max(abs(r) for r in residuals)
        status = CheckStatus.PASSED if worst <= tolerance else CheckStatus.FAILED
        return CheckResult(
            self.name, status,
            f"max |el_residual| = {worst:.3e} over {count} points (tolerance {tolerance:.1e})",
            {"max_abs_residual": worst, "points": count, "tolerance": tolerance},
        )


class TransversalityCheck(BaseCheck):
    def __init__(self, k: int, T_grid: Optional[Sequence[float]] = None):
        self.k = k
        self.T_grid = T_grid
        self.name = f"transversality_k{k}"

    async def evaluate(self, problem: Problem, x: Trajectory) -> CheckResult:
        scan = await asyncio.to_thread(transversality_scan, problem, x, self.k, self.T_grid)
        status = CheckStatus.PASSED if scan.verdict is Verdict.CONVERGES_TO_ZERO else CheckStatus.FAILED
        return CheckResult(self.name, status, f"verdict {scan.verdict.value}", {"scan": scan.to_dict()})


class WeakMaximalityCheck(BaseCheck):
    name = "weak_maximality"

    def __init__(self, competitors: Optional[List[Trajectory]] = None, T_grid: Optional[Sequence[float]] = None):
        self.competitors = competitors
        self.T_grid = T_grid

    async def evaluate(self, problem: Problem, x: Trajectory) -> CheckResult:
        report = await WeakMaximalityBattery().run(problem, x, self.competitors, self.T_grid)
        status = {
            MaximalityVerdict.NOT_REJECTED: CheckStatus.PASSED,
            MaximalityVerdict.INCONCLUSIVE: CheckStatus.WARNING,
            MaximalityVerdict.REJECTED: CheckStatus.FAILED,
        }[report.verdict]
        message = f"verdict {report.verdict.value}"
        if report.witness:
            message += f" (witness {report.witness})"
        return CheckResult(self.name, status, message, report.to_dict())
