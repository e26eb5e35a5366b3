"""
Exhaustive enumeration of on/off patterns for small instances.

Each leaf fixes every z_on and derives z_su = max(0, z_on[t] - z_on[t-1]) from
the initial state, then solves the remaining continuous LP. Used as ground
truth for branch-and-bound.
"""
import itertools
import logging
import math
import time
from typing import Optional

import numpy as np

from app.errors import OracleSizeError
from app.model.milp import MilpInstance, build_milp
from app.model.problem import ScheduleProblem
from app.model.schedule import extract_schedule, verify_schedule
from app.solver.branch_and_bound import MipResult, MipStatus
from app.solver.lp import LpEngine, solve_lp
from app.solver.simplex import LpStatus

logger = logging.getLogger(__name__)

MAX_ENUMERATED_BINARIES = 16


def enumerate_oracle(
    problem: ScheduleProblem,
    engine: LpEngine = "simplex",
    instance: Optional[MilpInstance] = None,
) -> MipResult:
    """Best leaf over all 2^(T*M) on/off patterns; node_count is the number of leaves."""
    T, M = problem.horizon, problem.n_modules
    if T * M > MAX_ENUMERATED_BINARIES:
        raise OracleSizeError(
            f"{T * M} on/off binaries exceed the enumeration limit of {MAX_ENUMERATED_BINARIES}"
        )
    instance = instance or build_milp(problem)
    idx = instance.index
    on_block = idx.block("z_on")
    su_block = idx.block("z_su")
    initial_on = np.array(problem.fleet.initial_on_state, dtype=float)

    started = time.perf_counter()
    best_obj = -math.inf
    best_x: Optional[np.ndarray] = None
    leaves = 0
    for pattern in itertools.product((0.0, 1.0), repeat=T * M):
        z_on = np.array(pattern).reshape(T, M)
        prev = np.vstack([initial_on[None, :], z_on[:-1]])
        z_su = np.maximum(0.0, z_on - prev)

        lower = instance.lower.copy()
        upper = instance.upper.copy()
        lower[on_block] = upper[on_block] = z_on.ravel()
        lower[su_block] = upper[su_block] = z_su.ravel()

        lp = solve_lp(instance, lower, upper, engine)
        leaves += 1
        if lp.status != LpStatus.OPTIMAL:
            continue
        if lp.objective > best_obj + 1e-12:
            best_obj, best_x = lp.objective, lp.x

    elapsed = time.perf_counter() - started
    if best_x is None:
        logger.info(f"Oracle: no feasible leaf among {leaves}")
        return MipResult(MipStatus.INFEASIBLE, None, None, math.nan, math.nan, math.inf, leaves, elapsed, "oracle")

    schedule = extract_schedule(problem, best_x, solver_objective=best_obj)
    logger.info(f"Oracle: best of {leaves} leaves = {best_obj:.6f} in {elapsed:.2f}s")
    return MipResult(
        status=MipStatus.OPTIMAL,
        schedule=schedule,
        x=best_x,
        objective=schedule.objective_value,
        best_bound=schedule.objective_value,
        gap=0.0,
        node_count=leaves,
        seconds=elapsed,
        backend="oracle",
        audit=verify_schedule(problem, schedule),
    )
