"""
Dense two-phase primal simplex on a dictionary tableau.

Solves  max c.x  s.t.  A x <= b,  x >= 0.

The columns are the structural variables, one slack per row and a single
artificial column used by phase one (-1 in every row). Every constraint row
of the table stores one basic variable as an affine function of the nonbasic
ones:

    x_B[i] = D[i, 0] + sum_j D[i, j + 1] * x_N[j]

and the last row stores the current phase objective the same way.

The table is rebuilt from the original data every `REFACTOR_EVERY` pivots,
whenever a basic value drifts below `-DRIFT_TOL`, and before a phase is
declared optimal, so answers are always certified against (A, b, c).

Entering variables follow Dantzig's rule; after `STALL_PIVOTS` pivots without
a strict objective gain Bland's rule takes over until the objective moves
again. The ratio test is Harris' two-pass test, which among rows within the
feasibility tolerance of the minimum ratio picks the largest pivot; under
Bland's rule the textbook minimum ratio with lowest-id ties is used.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
# relative to the largest entry of the entering column
PIVOT_TOL = 1e-9
DRIFT_TOL = 1e-7
REFACTOR_EVERY = 100
STALL_PIVOTS = 50
CERTIFY_ROUNDS = 5


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL = "numerical"


class _FeasibilityLost(Exception):
    """A rebuilt table shows a basic variable below zero."""


@dataclass
class SimplexResult:
    status: LpStatus
    x: Optional[np.ndarray]
    objective: float
    pivots: int = 0
    refactors: int = 0


class _Dictionary:
    def __init__(self, a: np.ndarray, b: np.ndarray, c: np.ndarray, max_pivots: int):
        m, n = a.shape
        self.m, self.n = m, n
        self.artificial = n + m
        self.columns = np.hstack([a, np.eye(m), -np.ones((m, 1))])
        self.rhs = b
        self.tol = FEASIBILITY_TOL * max(1.0, float(np.abs(b).max(initial=0.0)))
        self.cost = np.concatenate([c, np.zeros(m + 1)])
        self.phase_cost = np.zeros(n + m + 1)
        self.phase_cost[self.artificial] = -1.0
        self.basis = np.arange(n, n + m)
        self.nonbasis = np.append(np.arange(n), self.artificial)
        self.table = np.zeros((m + 1, n + 2))
        self.phase_one = False
        self.pivots = 0
        self.refactors = 0
        self.since_refactor = 0
        self.max_pivots = max_pivots

    @property
    def values_row(self) -> np.ndarray:
        return self.table[: self.m, 0]

    @property
    def reduced_costs(self) -> np.ndarray:
        coefs = self.table[self.m, 1:].copy()
        if not self.phase_one:
            coefs[self.nonbasis == self.artificial] = -np.inf
        return coefs

    def refactor(self) -> bool:
        """Rebuild the table for the current basis from the original data."""
        m = self.m
        cost = self.phase_cost if self.phase_one else self.cost
        if m == 0:
            solved = np.zeros((0, self.nonbasis.size + 1))
        else:
            rhs = np.column_stack([self.rhs, self.columns[:, self.nonbasis]])
            try:
                solved = np.linalg.solve(self.columns[:, self.basis], rhs)
            except np.linalg.LinAlgError:
                logger.debug(f"Singular basis after {self.pivots} pivots")
                return False
        cb = cost[self.basis]
        self.table[:m, 0] = solved[:, 0]
        self.table[:m, 1:] = -solved[:, 1:]
        self.table[m, 0] = cb @ solved[:, 0]
        self.table[m, 1:] = cost[self.nonbasis] - cb @ solved[:, 1:]
        self.refactors += 1
        self.since_refactor = 0
        return True

    def pivot(self, r: int, s: int) -> None:
        """Exchange basic row r with nonbasic column s (table column s + 1)."""
        D = self.table
        col = s + 1
        piv = D[r, col]
        row = -D[r] / piv
        row[col] = 1.0 / piv
        colv = D[:, col].copy()
        D += np.outer(colv, row)
        D[:, col] = colv * row[col]
        D[r] = row
        self.basis[r], self.nonbasis[s] = self.nonbasis[s], self.basis[r]
        self.pivots += 1
        self.since_refactor += 1

    def _entering(self, bland: bool) -> Optional[int]:
        coefs = self.reduced_costs
        candidates = np.nonzero(coefs > OPTIMALITY_TOL)[0]
        if candidates.size == 0:
            return None
        if bland:
            return int(candidates[np.argmin(self.nonbasis[candidates])])
        return int(candidates[np.argmax(coefs[candidates])])

    def _leaving(self, s: int, bland: bool) -> Optional[int]:
        col = self.table[: self.m, s + 1]
        scale = max(1.0, float(np.abs(col).max(initial=0.0)))
        eligible = np.nonzero(col < -PIVOT_TOL * scale)[0]
        if eligible.size == 0:
            return None
        alpha = -col[eligible]
        beta = np.maximum(self.values_row[eligible], 0.0)
        ratios = beta / alpha
        if bland:
            tied = eligible[ratios <= ratios.min()]
            return int(tied[np.argmin(self.basis[tied])])
        limit = np.min((beta + FEASIBILITY_TOL) / alpha)
        within = ratios <= limit
        pick = eligible[within]
        sizes = alpha[within]
        largest = pick[sizes >= sizes.max()]
        return int(largest[np.argmin(self.basis[largest])])

    def optimize(self) -> LpStatus:
        """Pivot the current phase to optimality on a possibly drifting table."""
        m = self.m
        best = self.table[m, 0]
        stall = 0
        while True:
            if self.pivots >= self.max_pivots:
                return LpStatus.ITERATION_LIMIT
            bland = stall >= STALL_PIVOTS
            if stall == STALL_PIVOTS:
                logger.debug(f"Objective stalled for {stall} pivots; using Bland's rule")
            s = self._entering(bland)
            if s is None:
                return LpStatus.OPTIMAL
            r = self._leaving(s, bland)
            if r is None:
                if self.since_refactor == 0:
                    return LpStatus.UNBOUNDED
                if not self.refactor():
                    return LpStatus.NUMERICAL
                continue
            self.pivot(r, s)
            drifted = self.values_row.min(initial=0.0) < -DRIFT_TOL
            if drifted or self.since_refactor >= REFACTOR_EVERY:
                if not self.refactor():
                    return LpStatus.NUMERICAL
                if self.values_row.min(initial=0.0) < -DRIFT_TOL:
                    raise _FeasibilityLost()
            z = self.table[m, 0]
            if z > best + OPTIMALITY_TOL * max(1.0, abs(best)):
                best = z
                stall = 0
            else:
                stall += 1

    def certified_optimize(self) -> LpStatus:
        """Optimize, then confirm the verdict on a freshly rebuilt table."""
        for _ in range(CERTIFY_ROUNDS):
            status = self.optimize()
            # optimize only reports UNBOUNDED on a freshly rebuilt table
            if status != LpStatus.OPTIMAL:
                return status
            if not self.refactor():
                return LpStatus.NUMERICAL
            if self.reduced_costs.max(initial=-np.inf) <= OPTIMALITY_TOL:
                return status
            logger.debug("Verdict did not survive refactoring; resuming")
        return LpStatus.NUMERICAL

    def primal_feasible(self) -> bool:
        """Feasible for phase two: no negative basic value and the artificial column out of the basis."""
        return self.artificial not in self.basis and self.values_row.min(initial=0.0) >= -self.tol

    def values(self) -> np.ndarray:
        x = np.zeros(self.n)
        for i, var in enumerate(self.basis):
            if var < self.n:
                x[var] = self.table[i, 0]
        return np.maximum(x, 0.0)


def _phase_one(d: _Dictionary) -> LpStatus:
    """Drive the current basis to feasibility; returns OPTIMAL when a feasible basis exists."""
    d.phase_one = True
    if not d.refactor():
        return LpStatus.NUMERICAL
    b = d.values_row
    if d.artificial in d.nonbasis and b.min(initial=0.0) < -FEASIBILITY_TOL:
        worst = np.nonzero(b <= b.min() + FEASIBILITY_TOL)[0]
        s = int(np.nonzero(d.nonbasis == d.artificial)[0][0])
        d.pivot(int(worst[np.argmin(d.basis[worst])]), s)
    logger.debug("Phase one started")

    status = d.certified_optimize()
    if status != LpStatus.OPTIMAL:
        return status
    if d.table[d.m, 0] < -d.tol:
        return LpStatus.INFEASIBLE

    basic_art = np.nonzero(d.basis == d.artificial)[0]
    if basic_art.size:
        r = int(basic_art[0])
        coefs = np.abs(d.table[r, 1:])
        if coefs.max(initial=0.0) <= PIVOT_TOL:
            return LpStatus.NUMERICAL
        d.pivot(r, int(np.argmax(coefs)))

    d.phase_one = False
    if not d.refactor():
        return LpStatus.NUMERICAL
    logger.debug(f"Phase one finished after {d.pivots} pivots")
    return LpStatus.OPTIMAL


def simplex_maximize(
    c: np.ndarray, a: np.ndarray, b: np.ndarray, max_pivots: Optional[int] = None
) -> SimplexResult:
    """Maximize c.x subject to a x <= b and x >= 0."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    m, n = a.shape
    if b.size != m or c.size != n:
        raise ValueError(f"shape mismatch: a {a.shape}, b {b.size}, c {c.size}")
    if max_pivots is None:
        max_pivots = 50 * (m + n) + 1000

    d = _Dictionary(a, b, c, max_pivots)

    def failed(status: LpStatus) -> SimplexResult:
        return SimplexResult(status, None, float("nan"), d.pivots, d.refactors)

    if not d.refactor():
        return failed(LpStatus.NUMERICAL)
    for _ in range(CERTIFY_ROUNDS):
        try:
            if not d.primal_feasible():
                status = _phase_one(d)
                if status != LpStatus.OPTIMAL:
                    return failed(status)
            status = d.certified_optimize()
        except _FeasibilityLost:
            logger.debug(f"Basis lost feasibility after {d.pivots} pivots; restarting phase one")
            d.phase_one = False
            if not d.refactor():
                return failed(LpStatus.NUMERICAL)
            continue
        if status != LpStatus.OPTIMAL:
            return failed(status)
        if d.primal_feasible():
            x = d.values()
            return SimplexResult(LpStatus.OPTIMAL, x, float(c @ x), d.pivots, d.refactors)
        logger.debug("Basis lost feasibility during phase two; restarting phase one")
    return failed(LpStatus.NUMERICAL)
