"""
tsvar

Calculus of variations on time scales: exact delta calculus on isolated
scales, Euler-Lagrange and transversality checks for infinite-horizon
problems, truncated-horizon weak-maximality scans and a collocation solver
for candidate extremals.
"""

__version__ = "0.1.0"
__author__ = "tsvar Contributors"

from .calculus import Trajectory, delta_derivative, delta_integral, mixed_eval
from .core import TsVarError
from .solver import solve_candidate
from .timescale import TimeScale
from .variational import Lagrangian, Problem

__all__ = [
    "TimeScale",
    "Trajectory",
    "delta_derivative",
    "delta_integral",
    "mixed_eval",
    "Lagrangian",
    "Problem",
    "solve_candidate",
    "TsVarError",
]
