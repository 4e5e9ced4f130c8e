"""
Variational Conditions

Euler-Lagrange and transversality conditions of infinite-horizon problems
on time scales, truncated-horizon scans and the weak-maximality battery.
"""

from .checks import CheckResult, CheckStatus
from .conditions import (
    admissibility_check,
    corollary_el_residual,
    corollary_transversality_value,
    el_coefficient,
    el_residual,
    is_admissible,
    psi,
    transversality_value,
    truncated_payoff,
)
from .engine import CandidateVerifier, VerificationResult
from .lagrangian import Horizon, Lagrangian, Problem
from .maximality import (
    MaximalityReport,
    MaximalityVerdict,
    WeakMaximalityBattery,
    default_competitors,
    default_perturbations,
    variation_quotient,
    variation_scan,
    weak_maximality_test,
)
from .scan import TruncationScan, Verdict, transversality_scan

__all__ = [
    'admissibility_check',
    'is_admissible',
    'el_coefficient',
    'psi',
    'el_residual',
    'transversality_value',
    'truncated_payoff',
    'corollary_el_residual',
    'corollary_transversality_value',
    'transversality_scan',
    'weak_maximality_test',
    'variation_quotient',
    'variation_scan',
    'default_perturbations',
    'default_competitors',
    'Lagrangian',
    'Problem',
    'Horizon',
    'TruncationScan',
    'Verdict',
    'MaximalityReport',
    'MaximalityVerdict',
    'WeakMaximalityBattery',
    'CandidateVerifier',
    'VerificationResult',
    'CheckResult',
    'CheckStatus',
]
