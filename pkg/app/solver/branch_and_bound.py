"""
Best-bound branch-and-bound over the module on/off binaries.

Only z_on columns are branched on: once they are integral the startup rows pin
every z_su to max(0, z_on[t] - z_on[t-1]). Both children of a node are solved
when it is branched; open nodes sit in a heap keyed by (-bound, sequence), so
equal bounds are served oldest first. Until the tree finds its own integral
leaf the search dives depth-first toward the rounded value of the branching
variable.
"""
import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.errors import SolverError
from app.model.milp import MilpInstance
from app.model.schedule import Schedule, ScheduleAudit, extract_schedule, verify_schedule
from app.solver.heuristic import warm_start_heuristic
from app.solver.lp import LpSolution, resolve_engine, solve_lp
from app.solver.simplex import LpStatus

logger = logging.getLogger(__name__)

DEFAULT_GAP = 1e-6
# a child relaxation never beats its parent beyond this relative slack
BOUND_SLACK = 1e-6


class MipStatus(str, Enum):
    OPTIMAL = "optimal"
    GAP_REACHED = "gap_reached"
    LIMIT_HIT = "limit_hit"
    INFEASIBLE = "infeasible"


class MipOptions(BaseModel):
    relative_gap: float = Field(DEFAULT_GAP, gt=0)
    integrality_tolerance: float = Field(1e-6, gt=0)
    node_limit: Optional[int] = Field(None, ge=1, description="LP relaxations solved, root included")
    time_limit: Optional[float] = Field(None, gt=0, description="seconds")
    branching: Literal["most-fractional"] = "most-fractional"
    node_selection: Literal["best-bound"] = "best-bound"
    lp_engine: Literal["simplex", "highs", "auto"] = "auto"
    warm_start: bool = True


@dataclass
class MipResult:
    status: MipStatus
    schedule: Optional[Schedule]
    x: Optional[np.ndarray]
    objective: float
    best_bound: float
    gap: float
    node_count: int
    seconds: float = 0.0
    backend: str = "branch-and-bound"
    audit: Optional[ScheduleAudit] = field(default=None, repr=False)

    @property
    def has_incumbent(self) -> bool:
        return self.schedule is not None


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    lp: LpSolution
    depth: int
    bound: float


def relative_gap(objective: float, bound: float) -> float:
    if not math.isfinite(objective):
        return math.inf
    return max(0.0, bound - objective) / max(1.0, abs(objective))


def _branch_column(x: np.ndarray, columns: np.ndarray, tol: float) -> Optional[int]:
    """Most fractional column; ties go to the lowest index."""
    if columns.size == 0:
        return None
    frac = np.abs(x[columns] - np.round(x[columns]))
    k = int(np.argmax(frac))
    if frac[k] <= tol:
        return None
    return int(columns[k])


def solve_milp(instance: MilpInstance, options: Optional[MipOptions] = None) -> MipResult:
    """Solve an instance from build_milp to the requested gap."""
    options = options or MipOptions()
    problem = instance.problem
    if problem is None:
        raise SolverError("instance carries no scheduling problem")
    engine = resolve_engine(instance, options.lp_engine)
    started = time.perf_counter()
    tol = options.integrality_tolerance
    candidates = instance.branch_candidates
    all_integer = np.nonzero(instance.integrality)[0]

    best_x: Optional[np.ndarray] = None
    best_obj = -math.inf
    if options.warm_start:
        warm = warm_start_heuristic(problem)
        if verify_schedule(problem, warm).passed:
            best_x = warm.to_vector(instance.index)
            best_obj = warm.objective_value
        else:
            logger.warning("Warm start is not feasible for this instance; searching without incumbent")

    def prune_level() -> float:
        return best_obj + options.relative_gap * max(1.0, abs(best_obj)) if best_x is not None else -math.inf

    def evaluate(lower: np.ndarray, upper: np.ndarray, depth: int, parent: float = math.inf) -> Optional[_Node]:
        lp = solve_lp(instance, lower, upper, engine)
        if lp.status == LpStatus.UNBOUNDED:
            raise SolverError("LP relaxation is unbounded; variable bounds are missing")
        if lp.status in (LpStatus.ITERATION_LIMIT, LpStatus.NUMERICAL):
            raise SolverError(f"LP relaxation failed ({lp.status.value})")
        if lp.status != LpStatus.OPTIMAL:
            return None
        if lp.objective > parent + BOUND_SLACK * max(1.0, abs(parent)):
            logger.warning(f"Child relaxation {lp.objective:.6f} exceeds its parent bound {parent:.6f}")
        return _Node(lower, upper, lp, depth, min(lp.objective, parent))

    root = evaluate(instance.lower.copy(), instance.upper.copy(), 0)
    node_count = 1
    heap: List[Tuple[float, int, _Node]] = []
    seq = 0
    if root is not None:
        heapq.heappush(heap, (-root.bound, seq, root))
        seq += 1
        logger.debug(f"Root relaxation {root.lp.objective:.6f} ({engine})")

    discarded_bound = -math.inf
    tree_incumbents = 0
    limit_hit = False
    dive: Optional[_Node] = None

    while heap or dive is not None:
        if options.node_limit is not None and node_count >= options.node_limit:
            limit_hit = True
            break
        if options.time_limit is not None and time.perf_counter() - started > options.time_limit:
            limit_hit = True
            break

        if dive is not None:
            node, dive = dive, None
        else:
            node = heapq.heappop(heap)[2]
        bound = node.bound
        if bound <= prune_level():
            discarded_bound = max(discarded_bound, bound)
            continue

        x = node.lp.x
        j = _branch_column(x, candidates, tol)
        if j is None:
            j = _branch_column(x, all_integer, tol)
        if j is None:
            if node.lp.objective > best_obj:
                best_obj, best_x = node.lp.objective, x
                tree_incumbents += 1
                logger.debug(f"Incumbent {best_obj:.6f} at depth {node.depth} after {node_count} nodes")
            continue

        children = []
        for value in (0.0, 1.0):
            lower, upper = node.lower.copy(), node.upper.copy()
            lower[j] = upper[j] = value
            child = evaluate(lower, upper, node.depth + 1, bound)
            node_count += 1
            if child is None:
                continue
            if child.bound <= prune_level():
                discarded_bound = max(discarded_bound, child.bound)
                continue
            children.append((value, child))

        preferred = 1.0 if x[j] >= 0.5 else 0.0
        for value, child in children:
            if tree_incumbents == 0 and value == preferred:
                dive = child
            else:
                heapq.heappush(heap, (-child.bound, seq, child))
                seq += 1

        if node_count % 200 < 2:
            open_bound = -heap[0][0] if heap else bound
            logger.debug(f"{node_count} nodes, {len(heap)} open, bound {open_bound:.6f}, incumbent {best_obj:.6f}")

    open_bounds = [-item[0] for item in heap] + ([dive.bound] if dive is not None else [])
    best_bound = max([best_obj, discarded_bound] + open_bounds)
    gap = relative_gap(best_obj, best_bound)
    elapsed = time.perf_counter() - started

    if best_x is None:
        status = MipStatus.LIMIT_HIT if limit_hit else MipStatus.INFEASIBLE
        logger.info(f"Branch-and-bound finished without incumbent: {status.value} after {node_count} nodes")
        return MipResult(status, None, None, math.nan, best_bound, math.inf, node_count, elapsed)

    if limit_hit:
        status = MipStatus.LIMIT_HIT
        logger.warning(f"Node or time limit hit with gap {gap:.3g}")
    elif options.relative_gap <= DEFAULT_GAP:
        status = MipStatus.OPTIMAL
    else:
        status = MipStatus.GAP_REACHED

    schedule = extract_schedule(problem, best_x, solver_objective=best_obj)
    audit = verify_schedule(problem, schedule)
    logger.info(
        f"Branch-and-bound {status.value}: objective {schedule.objective_value:.4f}, bound {best_bound:.4f}, "
        f"gap {gap:.2e}, {node_count} nodes, {elapsed:.2f}s"
    )
    return MipResult(
        status=status,
        schedule=schedule,
        x=best_x,
        objective=schedule.objective_value,
        best_bound=best_bound,
        gap=gap,
        node_count=node_count,
        seconds=elapsed,
        audit=audit,
    )
