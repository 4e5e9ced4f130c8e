"""
Candidate Verification Engine

Runs every check on a candidate concurrently and joins the outcomes into a
single verification result.
"""

import asyncio
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from ..calculus import Trajectory
from .checks import (
    AdmissibilityCheck,
    BaseCheck,
    CheckResult,
    CheckStatus,
    EulerLagrangeCheck,
    TransversalityCheck,
    WeakMaximalityCheck,
)
from .lagrangian import Problem


@dataclass
class VerificationResult:
    """Outcome of verifying one candidate."""
    candidate: str
    passed: bool
    checks: List[CheckResult]
    warnings: List[str]
    errors: List[str]

    def check(self, name: str) -> Optional[CheckResult]:
        return next((c for c in self.checks if c.name == name), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "candidate": self.candidate,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "warnings": self.warnings,
            "errors": self.errors,
        }


class CandidateVerifier:
    """
    Applies the necessary conditions to a candidate.

    A pass means the candidate satisfies the conditions on the sampled
    horizon; the hypotheses under which they are necessary are not checked.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize the verifier.

        Args:
            config: Options; "battery" (bool) adds the weak-maximality battery,
                "competitors" replaces its default competitor family.
        """
        self.config = config or {}
        self.logger = logging.getLogger(__name__)

    def checks_for(self, problem: Problem, T_grid: Optional[Sequence[float]] = None) -> List[BaseCheck]:
        checks: List[BaseCheck] = [AdmissibilityCheck(), EulerLagrangeCheck()]
        checks += [TransversalityCheck(k, T_grid) for k in range(1, problem.order + 1)]
        if self.config.get("battery"):
            checks.append(WeakMaximalityCheck(self.config.get("competitors"), T_grid))
        return checks

    async def verify(
        self,
        problem: Problem,
        candidate: Trajectory,
        T_grid: Optional[Sequence[float]] = None,
    ) -> VerificationResult:
        """
        Verify a candidate trajectory.

        Args:
            problem: The variational problem
            candidate: The trajectory to check
            T_grid: Truncation points; defaults to the problem's horizon

        Returns:
            VerificationResult with one CheckResult per check
        """
        label = candidate.label or repr(candidate)
        self.logger.info(f"Starting verification of {label}")

        checks = self.checks_for(problem, T_grid)
        outcomes = await asyncio.gather(
            *(check.run(problem, candidate) for check in checks), return_exceptions=True
        )

        results: List[CheckResult] = []
        warnings: List[str] = []
        errors: List[str] = []
        for check, outcome in zip(checks, outcomes):
            if isinstance(outcome, Exception):
                self.logger.error(f"Check {check.name} failed for {label}: {outcome}")
                errors.append(f"{check.name} failed: {outcome}")
                outcome = CheckResult(check.name, CheckStatus.ERROR, str(outcome))
            elif outcome.status is CheckStatus.WARNING:
                warnings.append(f"{check.name}: {outcome.message}")
            results.append(outcome)

        passed = all(result.ok for result in results)
        self.logger.info(f"Verification completed for {label}: {'pass' if passed else 'fail'}")
        return VerificationResult(
            candidate=label, passed=passed, checks=results, warnings=warnings, errors=errors)
