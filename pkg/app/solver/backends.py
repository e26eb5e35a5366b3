"""
Solver backends behind one contract: take a MilpInstance and MipOptions, return
a MipResult whose incumbent has been extracted and audited.
"""
import logging
import math
import time
from typing import Callable, Dict, Optional, Protocol

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

from app.errors import SolverError
from app.model.milp import MilpInstance
from app.model.schedule import extract_schedule, verify_schedule
from app.solver.branch_and_bound import DEFAULT_GAP, MipOptions, MipResult, MipStatus, relative_gap, solve_milp

logger = logging.getLogger(__name__)


class SolverBackend(Protocol):
    name: str

    def solve(self, instance: MilpInstance, options: Optional[MipOptions] = None) -> MipResult:
        ...


class BranchAndBoundBackend:
    """The in-repo branch-and-bound with simplex or HiGHS relaxations."""

    name = "branch-and-bound"

    def solve(self, instance: MilpInstance, options: Optional[MipOptions] = None) -> MipResult:
        return solve_milp(instance, options)


class HighsBackend:
    """scipy's HiGHS MILP solver."""

    name = "highs"

    def solve(self, instance: MilpInstance, options: Optional[MipOptions] = None) -> MipResult:
        options = options or MipOptions()
        problem = instance.problem
        if problem is None:
            raise SolverError("instance carries no scheduling problem")

        highs_options: Dict[str, float] = {"mip_rel_gap": options.relative_gap, "disp": False}
        if options.time_limit is not None:
            highs_options["time_limit"] = options.time_limit
        if options.node_limit is not None:
            highs_options["node_limit"] = options.node_limit

        started = time.perf_counter()
        res = milp(
            -instance.objective,
            constraints=LinearConstraint(instance.matrix, instance.row_lower, instance.row_upper),
            integrality=instance.integrality,
            bounds=Bounds(instance.lower, instance.upper),
            options=highs_options,
        )
        elapsed = time.perf_counter() - started
        nodes = int(getattr(res, "mip_node_count", 0) or 0)
        dual = getattr(res, "mip_dual_bound", None)

        if res.x is None:
            if res.status == 2:
                status = MipStatus.INFEASIBLE
            elif res.status == 1:
                status = MipStatus.LIMIT_HIT
            else:
                raise SolverError(f"HiGHS failed: {res.message}")
            logger.info(f"HiGHS finished without incumbent: {status.value}")
            return MipResult(status, None, None, math.nan, math.nan, math.inf, nodes, elapsed, self.name)

        x = np.clip(res.x, instance.lower, instance.upper)
        objective = float(instance.objective @ x)
        bound = -float(dual) if dual is not None and math.isfinite(dual) else objective
        bound = max(bound, objective)
        if res.status == 0:
            status = MipStatus.OPTIMAL if options.relative_gap <= DEFAULT_GAP else MipStatus.GAP_REACHED
        else:
            status = MipStatus.LIMIT_HIT

        schedule = extract_schedule(problem, x, solver_objective=objective)
        gap = relative_gap(schedule.objective_value, bound)
        logger.info(
            f"HiGHS {status.value}: objective {schedule.objective_value:.4f}, bound {bound:.4f}, "
            f"{nodes} nodes, {elapsed:.2f}s"
        )
        return MipResult(
            status=status,
            schedule=schedule,
            x=x,
            objective=schedule.objective_value,
            best_bound=bound,
            gap=gap,
            node_count=nodes,
            seconds=elapsed,
            backend=self.name,
            audit=verify_schedule(problem, schedule),
        )


BACKENDS: Dict[str, Callable[[], SolverBackend]] = {
    BranchAndBoundBackend.name: BranchAndBoundBackend,
    HighsBackend.name: HighsBackend,
}


def get_backend(name: str) -> SolverBackend:
    try:
        return BACKENDS[name]()
    except KeyError:
        raise SolverError(f"unknown solver backend '{name}' (choose from {', '.join(sorted(BACKENDS))})")
