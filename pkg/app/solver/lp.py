"""
LP relaxations of a MilpInstance.

`solve_lp` relaxes integrality and optionally overrides variable bounds (this
is how branch-and-bound and the oracle fix binaries). Two engines share the
same contract: the in-repo dense simplex and scipy's HiGHS.

A simplex answer is only reported optimal after its primal residuals pass
`RESIDUAL_TOL` against the instance rows and the bound overrides; otherwise,
and when the simplex runs into its pivot limit or a singular basis, the LP is
solved again with HiGHS.
"""
import logging
import time
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from app.errors import SolverError
from app.model.milp import MilpInstance
from app.solver.simplex import FEASIBILITY_TOL, LpStatus, simplex_maximize

logger = logging.getLogger(__name__)

LpEngine = Literal["simplex", "highs", "auto"]
# dense tableau cells above which "auto" hands LPs to HiGHS
AUTO_DENSE_LIMIT = 400_000
# relative to the magnitude of each row (|bound| + |a| . |x|)
RESIDUAL_TOL = 1e-9


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray]
    objective: float
    engine: str
    iterations: int = 0
    seconds: float = 0.0
    residual: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


def resolve_engine(instance: MilpInstance, engine: str) -> str:
    if engine in ("simplex", "highs"):
        return engine
    if engine != "auto":
        raise SolverError(f"unknown LP engine '{engine}'")
    finite_upper = int(np.count_nonzero(np.isfinite(instance.upper)))
    rows = 2 * instance.n_rows + finite_upper
    return "simplex" if rows * instance.n_variables <= AUTO_DENSE_LIMIT else "highs"


def _excess(value: np.ndarray, limit: np.ndarray, scale: np.ndarray) -> float:
    """Largest (value - limit) / (1 + scale) over the finite limits."""
    finite = np.isfinite(limit)
    if not np.any(finite):
        return 0.0
    over = (value[finite] - limit[finite]) / (1.0 + np.abs(limit[finite]) + scale[finite])
    return float(max(0.0, over.max()))


def primal_residual(instance: MilpInstance, x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> float:
    """Largest scaled violation of the instance rows and of the bounds at x."""
    activity = instance.matrix @ x
    magnitude = abs(instance.matrix) @ np.abs(x)
    no_scale = np.zeros_like(x)
    return max(
        _excess(activity, instance.row_upper, magnitude),
        _excess(-activity, -instance.row_lower, magnitude),
        _excess(x, upper, no_scale),
        _excess(-x, -lower, no_scale),
    )


def _solve_simplex(instance: MilpInstance, lower: np.ndarray, upper: np.ndarray) -> LpSolution:
    free = upper - lower > FEASIBILITY_TOL
    A = instance.matrix.toarray()
    shift = A @ lower
    A_free = A[:, free]

    blocks_a, blocks_b = [], []
    has_upper = np.isfinite(instance.row_upper)
    blocks_a.append(A_free[has_upper])
    blocks_b.append(instance.row_upper[has_upper] - shift[has_upper])
    has_lower = np.isfinite(instance.row_lower)
    blocks_a.append(-A_free[has_lower])
    blocks_b.append(shift[has_lower] - instance.row_lower[has_lower])

    width = upper[free] - lower[free]
    bounded = np.isfinite(width)
    eye = np.eye(int(free.sum()))
    blocks_a.append(eye[bounded])
    blocks_b.append(width[bounded])

    a = np.vstack(blocks_a)
    b = np.concatenate(blocks_b)

    # rows left without free columns only need a consistent right-hand side
    empty = ~np.any(np.abs(a) > 0.0, axis=1)
    if np.any(b[empty] < -FEASIBILITY_TOL):
        return LpSolution(LpStatus.INFEASIBLE, None, float("nan"), "simplex")
    a, b = a[~empty], b[~empty]

    c = instance.objective[free]
    result = simplex_maximize(c, a, b)
    if result.status != LpStatus.OPTIMAL:
        return LpSolution(result.status, None, float("nan"), "simplex", result.pivots)
    x = lower.copy()
    x[free] += result.x
    return LpSolution(LpStatus.OPTIMAL, x, float(instance.objective @ x), "simplex", result.pivots)


_HIGHS_STATUS = {
    0: LpStatus.OPTIMAL,
    1: LpStatus.ITERATION_LIMIT,
    2: LpStatus.INFEASIBLE,
    3: LpStatus.UNBOUNDED,
}


def _solve_highs(instance: MilpInstance, lower: np.ndarray, upper: np.ndarray) -> LpSolution:
    A = instance.matrix
    eq = instance.row_lower == instance.row_upper
    ub_rows = ~eq & np.isfinite(instance.row_upper)
    lb_rows = ~eq & np.isfinite(instance.row_lower)

    a_ub = A[np.nonzero(ub_rows)[0]]
    b_ub = instance.row_upper[ub_rows]
    if lb_rows.any():
        a_ub = sparse.vstack([a_ub, -A[np.nonzero(lb_rows)[0]]]).tocsr()
        b_ub = np.concatenate([b_ub, -instance.row_lower[lb_rows]])

    res = linprog(
        -instance.objective,
        A_ub=a_ub if a_ub.shape[0] else None,
        b_ub=b_ub if a_ub.shape[0] else None,
        A_eq=A[np.nonzero(eq)[0]] if eq.any() else None,
        b_eq=instance.row_upper[eq] if eq.any() else None,
        bounds=np.column_stack([lower, upper]),
        method="highs",
    )
    status = _HIGHS_STATUS.get(res.status)
    if status is None:
        logger.warning(f"HiGHS LP returned status {res.status}: {res.message}")
        status = LpStatus.ITERATION_LIMIT
    if status != LpStatus.OPTIMAL:
        return LpSolution(status, None, float("nan"), "highs", int(getattr(res, "nit", 0)))
    x = np.clip(res.x, lower, upper)
    return LpSolution(LpStatus.OPTIMAL, x, float(instance.objective @ x), "highs", int(res.nit))


def solve_lp(
    instance: MilpInstance,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    engine: LpEngine = "simplex",
) -> LpSolution:
    """Solve the continuous relaxation of `instance` under optional bound overrides."""
    lo = instance.lower if lower is None else np.asarray(lower, dtype=float)
    hi = instance.upper if upper is None else np.asarray(upper, dtype=float)
    if lo.shape != (instance.n_variables,) or hi.shape != (instance.n_variables,):
        raise SolverError("bound vectors do not match the variable count")
    if not np.all(np.isfinite(lo)):
        raise SolverError("lower bounds must be finite")

    chosen = resolve_engine(instance, engine)
    started = time.perf_counter()
    if np.any(lo > hi + FEASIBILITY_TOL):
        solution = LpSolution(LpStatus.INFEASIBLE, None, float("nan"), chosen)
        solution.seconds = time.perf_counter() - started
        return solution
    hi = np.maximum(hi, lo)
    if chosen == "simplex":
        solution = _solve_simplex(instance, lo, hi)
        if solution.optimal:
            assert solution.x is not None
            solution.residual = primal_residual(instance, solution.x, lo, hi)
        if solution.status in (LpStatus.ITERATION_LIMIT, LpStatus.NUMERICAL) or solution.residual > RESIDUAL_TOL:
            logger.warning(
                f"Simplex answer rejected ({solution.status.value}, residual {solution.residual:.3g} after "
                f"{solution.iterations} pivots); solving with HiGHS"
            )
            solution = _solve_highs(instance, lo, hi)
    else:
        solution = _solve_highs(instance, lo, hi)
    if solution.optimal and solution.engine == "highs":
        assert solution.x is not None
        solution.residual = primal_residual(instance, solution.x, lo, hi)
    solution.seconds = time.perf_counter() - started
    return solution
