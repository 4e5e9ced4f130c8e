"""
Candidate Extremal Solver

Expands x over a user-supplied basis, enforces the Euler-Lagrange equation
at collocation points together with the initial conditions, and pins the
remaining freedom with the transversality conditions.

Stage 1 solves {el_residual = 0 at the collocation points} with the initial
conditions met exactly: a linear solve when the residual is affine in the
coefficients, damped Gauss-Newton otherwise. Stage 2 minimises the weighted
transversality tail over the null space left by stage 1.

Internally the basis is normalised column-wise (phi_j / max|phi_j|) and every
residual row is divided by its absolute stencil weight, so that rank decisions
compare against the natural size of each row rather than against floating
round-off.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares

from .calculus import BasisTable, BasisTrajectory, Trajectory, nested_delta
from .core import BasisError, ConvergenceError, DomainError, InfeasibilityError
from .exprlang import time_function
from .variational.conditions import admissibility_check, el_residual_at, transversality_value_at
from .variational.lagrangian import PathEvaluation, Problem
from .variational.scan import TruncationScan, transversality_scan

logger = logging.getLogger(__name__)

NULL_RTOL = 1e-10
NONLINEAR_NULL_RTOL = 1e-6
PROBE_TOL = 1e-10
IC_RTOL = 1e-9
PROBE_COUNT = 3
STAGE2_STARTS = 6
MAX_WORKERS = 8


@dataclass
class SolverTolerances:
    """Numerical knobs of the collocation solver."""
    zero: float = NULL_RTOL
    collocation_points: Optional[int] = None
    max_iterations: int = 50


@dataclass
class BasisAnsatz:
    """x(t) = sum_j c_j phi_j(t)."""
    basis: List[Callable[[float], float]]
    coefficients: np.ndarray
    labels: List[str] = field(default_factory=list)
    gram_condition: float = float("nan")

    def trajectory(self, table: BasisTable) -> BasisTrajectory:
        return BasisTrajectory(table, self.coefficients, label=self.describe())

    def describe(self, digits: int = 10) -> str:
        """Readable sum; coefficients below 1e-12 of the largest are dropped."""
        cutoff = 1e-12 * float(np.max(np.abs(self.coefficients), initial=0.0))
        terms = [
            f"{c:.{digits}g}*({label})"
            for c, label in zip(self.coefficients, self.labels or [f"phi{j}" for j in range(len(self.basis))])
            if abs(c) > cutoff
        ]
        return " + ".join(terms) or "0"


@dataclass
class FamilyAnalysis:
    """The directions along which the stage-1 system leaves the coefficients free."""
    family_dim: int
    null_basis: np.ndarray
    singular_values: List[float]

    @property
    def directions(self) -> List[List[float]]:
        return [list(map(float, col)) for col in self.null_basis.T]


@dataclass
class SolveResult:
    """Outcome of solve_candidate."""
    ansatz: BasisAnsatz
    el_residual_norm: float
    transversality_report: Dict[int, TruncationScan]
    family_dim: int
    null_basis: np.ndarray
    linear: bool
    seed: int
    stage2_cost: Optional[float] = None
    admissibility: List[float] = field(default_factory=list)

    @property
    def coefficients(self) -> np.ndarray:
        return self.ansatz.coefficients

    def to_dict(self) -> Dict[str, Any]:
        return {
            "basis": list(self.ansatz.labels),
            "coefficients": [float(c) for c in self.coefficients],
            "family_dim": self.family_dim,
            "el_residual_norm": self.el_residual_norm,
            "admissibility": list(self.admissibility),
            "gram_condition": self.ansatz.gram_condition,
            "linear": self.linear,
            "seed": self.seed,
            "stage2_cost": self.stage2_cost,
            "transversality": {str(k): scan.to_dict() for k, scan in self.transversality_report.items()},
        }


class _Perturbed(Trajectory):
    """base with a single point value shifted by delta."""

    def __init__(self, base: Trajectory, index: int, delta: float):
        super().__init__(base.scale, lambda t: 0.0, base.label)
        self._base = base
        self._index = index
        self._delta = delta

    def _evaluate_index(self, index: int) -> float:
        value = self._base.at(index)
        return value + self._delta if index == self._index else value


def _svd_solve(matrix: np.ndarray, rhs: np.ndarray, threshold: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimum-norm least-squares solution, the null directions and the singular values."""
    if matrix.shape[1] == 0:
        return np.zeros(0), np.zeros((0, 0)), np.zeros(0)
    u, s, vt = np.linalg.svd(matrix, full_matrices=True)
    rank = int(np.sum(s > threshold))
    solution = vt[:rank].T @ ((u[:, :rank].T @ rhs) / s[:rank])
    return solution, vt[rank:].T, s


def _orthonormal(directions: np.ndarray) -> np.ndarray:
    if directions.shape[1] == 0:
        return directions
    q, _ = np.linalg.qr(directions)
    for j in range(q.shape[1]):
        pivot = q[np.argmax(np.abs(q[:, j])), j]
        if pivot < 0:
            q[:, j] = -q[:, j]
    return q


class CollocationSolver:
    """
    Two-stage solver for one problem and one basis.

    Determinism: the only randomness is the affinity probe and the stage-2
    multi-start, both drawn from numpy's default_rng(seed).
    """

    def __init__(
        self,
        problem: Problem,
        basis: Sequence[Callable[[float], float]],
        labels: Optional[Sequence[str]] = None,
        tolerances: Optional[SolverTolerances] = None,
        seed: int = 0,
        T_grid: Optional[Sequence[float]] = None,
        stage2_starts: int = STAGE2_STARTS,
    ):
        self.logger = logging.getLogger(__name__)
        self.problem = problem
        self.tolerances = tolerances or SolverTolerances()
        self.seed = seed
        self.stage2_starts = stage2_starts
        self.labels = list(labels) if labels is not None else [f"phi{j}" for j in range(len(basis))]
        self.basis = list(basis)
        self.table = BasisTable(problem.scale, self.basis)
        n, r = len(self.basis), problem.order

        if n < r:
            raise BasisError(f"Basis of size {n} cannot meet {r} initial conditions")
        count = self.tolerances.collocation_points or max(3 * n, 20)
        self.rows = problem.index_grid(count)
        self._points = list(range(problem.start_index, self.rows[-1] + 2 * r + 1))

        values = self.table.matrix(self._points)
        col_scale = np.max(np.abs(values), axis=0)
        self.col_scale = np.where(col_scale > 0, col_scale, 1.0)
        self._normalised = values / self.col_scale
        self.gram_condition = self._check_basis()

        T_grid = problem.T_grid() if T_grid is None else T_grid
        self.T_indices = [problem.scale.index_of(T) for T in T_grid]
        self._row_scale: Optional[np.ndarray] = None

    # -- basis --------------------------------------------------------------

    def _check_basis(self) -> float:
        """
        Condition number of the collocation Gram matrix.

        Raises BasisError below full column rank, not merely below rank r:
        a dependent basis leaves its coefficients undetermined even when the
        initial conditions can be met (see docs/technical/numerics.md).
        """
        colloc = self._normalised[: len(self.rows)]
        s = np.linalg.svd(colloc, compute_uv=False)
        rank = int(np.sum(s > NULL_RTOL * s[0])) if s.size and s[0] > 0 else 0
        if rank < len(self.basis):
            raise BasisError(
                f"Basis is linearly dependent on the collocation grid (rank {rank} < {len(self.basis)})")
        gram = colloc.T @ colloc
        return float(np.linalg.cond(gram))

    def coefficients(self, scaled: np.ndarray) -> np.ndarray:
        return np.asarray(scaled, dtype=float) / self.col_scale

    def trajectory(self, coefficients: np.ndarray) -> BasisTrajectory:
        return BasisTrajectory(self.table, coefficients)

    # -- residuals ----------------------------------------------------------

    def _el_rows(self, x: Trajectory, rows: Sequence[int]) -> np.ndarray:
        path = PathEvaluation(self.problem, x)
        return np.array([el_residual_at(path, i) for i in rows])

    def residuals(self, coefficients: np.ndarray) -> np.ndarray:
        """Raw E-L residuals at the collocation points."""
        return self._el_rows(self.trajectory(coefficients), self.rows)

    def _stencil_scale(self, base: Trajectory) -> np.ndarray:
        """Sum_p |dR_m/dx_p| * max_j |phi_j(t_p)| for every row m, by perturbing point values."""
        r = self.problem.order
        first_row = self.rows[0]
        scale = np.zeros(len(self.rows))
        for offset, p in enumerate(self._points):
            affected = [m for m in range(max(first_row, p - 2 * r), min(self.rows[-1], p) + 1)]
            if not affected:
                continue
            delta = 1e-4 * (1.0 + abs(base.at(p)))
            up = self._el_rows(_Perturbed(base, p, delta), affected)
            down = self._el_rows(_Perturbed(base, p, -delta), affected)
            weight = np.abs(up - down) / (2.0 * delta)
            positions = [m - first_row for m in affected]
            scale[positions] += weight * np.max(np.abs(self._normalised[offset]))
        return np.where(scale > 0, scale, 1.0)

    def scaled_residuals(self, scaled: np.ndarray) -> np.ndarray:
        if self._row_scale is None:
            raise RuntimeError("Row scaling not initialised")
        return self.residuals(self.coefficients(scaled)) / self._row_scale

    def _initial_conditions(self) -> Tuple[np.ndarray, np.ndarray]:
        """Scaled IC rows and right-hand side."""
        scale, a = self.problem.scale, self.problem.start_index
        rows, rhs = [], []
        for i, alpha in enumerate(self.problem.initial_conditions):
            row = nested_delta(scale, self.table.row, a, i) / self.col_scale
            weights = [
                abs(nested_delta(scale, lambda j, p=p: 1.0 if j == p else 0.0, a, i))
                * np.max(np.abs(self._normalised[p - self._points[0]]))
                for p in range(a, a + i + 1)
            ]
            norm = sum(weights) or 1.0
            rows.append(row / norm)
            rhs.append(alpha / norm)
        return np.vstack(rows), np.array(rhs)

    # -- stage 1 ------------------------------------------------------------

    def probe_linearity(self) -> bool:
        """Second differences of the scaled residual along random directions."""
        rng = np.random.default_rng(self.seed)
        n = len(self.basis)
        base = rng.standard_normal(n)
        self._row_scale = self._stencil_scale(self.trajectory(self.coefficients(base)))
        for _ in range(PROBE_COUNT):
            c = rng.standard_normal(n)
            d = rng.standard_normal(n)
            d /= np.linalg.norm(d)
            second = self.scaled_residuals(c + d) - 2 * self.scaled_residuals(c) + self.scaled_residuals(c - d)
            if np.max(np.abs(second)) > PROBE_TOL:
                self.logger.debug(f"Residual is nonlinear in the coefficients: |second difference| = "
                                  f"{np.max(np.abs(second)):.3e}")
                return False
        return True

    def _ic_particular(self) -> Tuple[np.ndarray, np.ndarray]:
        C, d = self._initial_conditions()
        s_max = np.linalg.norm(C, 2)
        particular, null_c, _ = _svd_solve(C, d, NULL_RTOL * s_max)
        miss = np.linalg.norm(C @ particular - d)
        if miss > IC_RTOL * (1.0 + np.linalg.norm(d)):
            raise InfeasibilityError(
                f"No combination of the basis meets the initial conditions (residual {miss:.3e})")
        return particular, null_c

    def _linear_stage(self, particular: np.ndarray, null_c: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[float]]:
        n = len(self.basis)
        b = self.scaled_residuals(np.zeros(n))
        A = np.column_stack([self.scaled_residuals(e) - b for e in np.eye(n)])
        C, _ = self._initial_conditions()
        threshold = self.tolerances.zero * np.linalg.norm(np.vstack([C, A]), 2)
        z, null_k, s = _svd_solve(A @ null_c, -(A @ particular + b), threshold)
        return particular + null_c @ z, null_c @ null_k, [float(v) for v in s]

    def _jacobian(self, fn: Callable[[np.ndarray], np.ndarray], z: np.ndarray, f0: np.ndarray) -> np.ndarray:
        def column(j: int) -> np.ndarray:
            step = 1e-7 * (1.0 + abs(z[j]))
            shifted = z.copy()
            shifted[j] += step
            return (fn(shifted) - f0) / step

        with ThreadPoolExecutor(max_workers=min(MAX_WORKERS, max(1, z.size))) as pool:
            columns = list(pool.map(column, range(z.size)))
        return np.column_stack(columns) if columns else np.zeros((f0.size, 0))

    def _nonlinear_stage(self, particular: np.ndarray, null_c: np.ndarray) -> Tuple[np.ndarray, np.ndarray, List[float]]:
        def fn(z: np.ndarray) -> np.ndarray:
            return self.scaled_residuals(particular + null_c @ z)

        z = np.zeros(null_c.shape[1])
        value = fn(z)
        best_z, best_norm = z, np.linalg.norm(value)
        converged = False
        for iteration in range(self.tolerances.max_iterations):
            J = self._jacobian(fn, z, value)
            step, _, _ = _svd_solve(J, -value, 1e-12 * max(np.linalg.norm(J, 2), 1e-300))
            alpha = 1.0
            while alpha > 1e-6:
                trial = z + alpha * step
                trial_value = fn(trial)
                if np.linalg.norm(trial_value) < np.linalg.norm(value):
                    break
                alpha /= 2
            else:
                converged = True
                break
            z, value = trial, trial_value
            norm = np.linalg.norm(value)
            self.logger.debug(f"Gauss-Newton iteration {iteration}: |R| = {norm:.3e}, step = {alpha:g}")
            if norm < best_norm:
                best_z, best_norm = z, norm
            if norm <= self.tolerances.zero or np.linalg.norm(alpha * step) <= 1e-12 * (1.0 + np.linalg.norm(z)):
                converged = True
                break
        if not converged:
            best = self.coefficients(particular + null_c @ best_z)
            raise ConvergenceError(
                f"Gauss-Newton did not converge in {self.tolerances.max_iterations} iterations "
                f"(|R| = {best_norm:.3e})", best_iterate=best)

        solution = particular + null_c @ best_z
        J = self._jacobian(self.scaled_residuals, solution, self.scaled_residuals(solution))
        C, _ = self._initial_conditions()
        M = np.vstack([C, J])
        threshold = NONLINEAR_NULL_RTOL * np.linalg.norm(M, 2)
        _, null_m, s = _svd_solve(M, np.zeros(M.shape[0]), threshold)
        return solution, null_m, [float(v) for v in s]

    def stage1(self) -> Tuple[np.ndarray, np.ndarray, bool, List[float]]:
        """(scaled solution, scaled null directions, linear?, singular values)."""
        linear = self.probe_linearity()
        particular, null_c = self._ic_particular()
        if linear:
            solution, null, s = self._linear_stage(particular, null_c)
        else:
            solution, null, s = self._nonlinear_stage(particular, null_c)
        self.logger.info(f"Stage 1 ({'linear' if linear else 'Gauss-Newton'}): family dimension {null.shape[1]}")
        return solution, null, linear, s

    def family(self, scaled_null: np.ndarray, singular_values: Sequence[float]) -> FamilyAnalysis:
        directions = scaled_null / self.col_scale[:, None]
        return FamilyAnalysis(
            family_dim=scaled_null.shape[1],
            null_basis=_orthonormal(directions),
            singular_values=list(singular_values),
        )

    # -- stage 2 ------------------------------------------------------------

    def pinning_residuals(self, scaled: np.ndarray, include_el: bool = False) -> np.ndarray:
        """sqrt(w(T')) * transversality_value for every k and every T' of the grid, w = 1/(1+|T'|^{2r})."""
        r = self.problem.order
        x = self.trajectory(self.coefficients(scaled))
        path = PathEvaluation(self.problem, x)
        values = []
        for k in range(1, r + 1):
            for index in self.T_indices:
                T = self.problem.scale.point(index)
                weight = 1.0 / math.sqrt(1.0 + abs(T) ** (2 * r))
                values.append(weight * transversality_value_at(path, k, index))
        out = np.array(values)
        if include_el:
            out = np.concatenate([out, self.scaled_residuals(scaled)])
        return out

    def pin(
        self,
        base: np.ndarray,
        null: np.ndarray,
        starts: Sequence[np.ndarray],
        include_el: bool = False,
    ) -> Tuple[np.ndarray, float]:
        """Minimise the pinning objective over base + null @ y from each start; keep the lowest cost."""
        def fn(y: np.ndarray) -> np.ndarray:
            return self.pinning_residuals(base + null @ y, include_el)

        residual_count = self.problem.order * len(self.T_indices)
        method = "lm" if residual_count >= null.shape[1] else "trf"
        best_y, best_cost = None, math.inf
        for start in starts:
            try:
                result = least_squares(fn, np.asarray(start, dtype=float), method=method,
                                       xtol=1e-15, ftol=1e-15, gtol=1e-15, x_scale="jac")
            except (ValueError, ArithmeticError, DomainError) as e:
                self.logger.debug(f"Pinning start {start} abandoned: {e}")
                continue
            self.logger.debug(f"Pinning start {np.round(start, 3)}: cost {result.cost:.3e}")
            if result.cost < best_cost:
                best_y, best_cost = result.x, float(result.cost)
        if best_y is None:
            raise ConvergenceError("Transversality pinning failed from every start", best_iterate=self.coefficients(base))
        return base + null @ best_y, best_cost

    def default_starts(self, dim: int) -> List[np.ndarray]:
        rng = np.random.default_rng(self.seed + 1)
        return [np.zeros(dim)] + [rng.standard_normal(dim) for _ in range(self.stage2_starts)]

    # -- driver -------------------------------------------------------------

    def solve(self) -> SolveResult:
        self.logger.info(f"Solving over {len(self.basis)} basis functions at {len(self.rows)} collocation points")
        solution, null, linear, singular_values = self.stage1()
        family = self.family(null, singular_values)

        stage2_cost = None
        if family.family_dim > 0:
            solution, stage2_cost = self.pin(solution, null, self.default_starts(family.family_dim),
                                             include_el=not linear)
            self.logger.info(f"Stage 2 pinned the family with cost {stage2_cost:.3e}")

        coefficients = self.coefficients(solution)
        ansatz = BasisAnsatz(self.basis, coefficients, self.labels, self.gram_condition)
        x = self.trajectory(coefficients)
        el_norm = float(np.max(np.abs(self.residuals(coefficients))))
        T_grid = [self.problem.scale.point(i) for i in self.T_indices]
        report = {
            k: transversality_scan(self.problem, x, k, T_grid)
            for k in range(1, self.problem.order + 1)
        }
        return SolveResult(
            ansatz=ansatz,
            el_residual_norm=el_norm,
            transversality_report=report,
            family_dim=family.family_dim,
            null_basis=family.null_basis,
            linear=linear,
            seed=self.seed,
            stage2_cost=stage2_cost,
            admissibility=admissibility_check(self.problem, x),
        )


def _basis_callables(basis: Sequence[Any]) -> Tuple[List[Callable[[float], float]], List[str]]:
    functions, labels = [], []
    for j, phi in enumerate(basis):
        if isinstance(phi, str):
            functions.append(time_function(phi))
            labels.append(phi)
        else:
            functions.append(phi)
            labels.append(getattr(phi, "__name__", f"phi{j}"))
    return functions, labels


def solve_candidate(
    problem: Problem,
    basis: Sequence[Any],
    colloc: Optional[Dict[str, Any]] = None,
    seed: int = 0,
    tolerances: Optional[SolverTolerances] = None,
) -> SolveResult:
    """
    Candidate extremal over a basis of expressions in t or callables.

    colloc may carry "points" (collocation point count) and "T_grid".
    """
    colloc = colloc or {}
    tolerances = tolerances or SolverTolerances()
    if colloc.get("points"):
        tolerances = SolverTolerances(tolerances.zero, colloc["points"], tolerances.max_iterations)
    functions, labels = _basis_callables(basis)
    solver = CollocationSolver(problem, functions, labels, tolerances, seed, colloc.get("T_grid"))
    return solver.solve()


def family_analysis(
    problem: Problem,
    basis: Sequence[Any],
    stage1_solution: Optional[np.ndarray] = None,
    seed: int = 0,
) -> FamilyAnalysis:
    """
    Dimension and orthonormal coefficient basis of the null space of the E-L + IC system.

    For nonlinear residuals the system is linearised at stage1_solution (coefficients),
    or at the stage-1 solution computed here when omitted.
    """
    functions, labels = _basis_callables(basis)
    solver = CollocationSolver(problem, functions, labels, seed=seed)
    linear = solver.probe_linearity()
    if linear or stage1_solution is None:
        _, null, _, s = solver.stage1()
        return solver.family(null, s)
    scaled = np.asarray(stage1_solution, dtype=float) * solver.col_scale
    J = solver._jacobian(solver.scaled_residuals, scaled, solver.scaled_residuals(scaled))
    C, _ = solver._initial_conditions()
    M = np.vstack([C, J])
    _, null, s = _svd_solve(M, np.zeros(M.shape[0]), NONLINEAR_NULL_RTOL * np.linalg.norm(M, 2))
    return solver.family(null, [float(v) for v in s])
