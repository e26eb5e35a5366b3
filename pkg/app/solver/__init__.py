# LP relaxations, branch-and-bound and reference solvers
from app.solver.backends import BranchAndBoundBackend, HighsBackend, SolverBackend, get_backend
from app.solver.branch_and_bound import MipOptions, MipResult, MipStatus, solve_milp
from app.solver.heuristic import warm_start_heuristic
from app.solver.lp import LpSolution, solve_lp
from app.solver.oracle import enumerate_oracle
from app.solver.simplex import LpStatus, simplex_maximize

__all__ = [
    "BranchAndBoundBackend",
    "HighsBackend",
    "LpSolution",
    "LpStatus",
    "MipOptions",
    "MipResult",
    "MipStatus",
    "SolverBackend",
    "enumerate_oracle",
    "get_backend",
    "simplex_maximize",
    "solve_lp",
    "solve_milp",
    "warm_start_heuristic",
]
