"""
Greedy warm start for branch-and-bound.

Every module may use an equal share of the hour's wind. A module produces in
the hours where its share of the target power (all the wind when hydrogen at
peak efficiency is worth more than the grid price, otherwise only the wind that
cannot be exported) reaches its minimum load. Producing hours are grouped into
blocks; each block needs a startup hour before it and, unless it runs to the
end of the horizon, must finish at or below the ramp limit so the module can
switch off. Powers inside a block are fitted with a forward/backward interval
pass over the ramp limits.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from app.curve.pwl import peak_efficiency
from app.model.problem import ScheduleProblem
from app.model.schedule import Schedule, empty_schedule, schedule_objective, verify_schedule

logger = logging.getLogger(__name__)

Block = Tuple[int, int]


def _blocks(want: np.ndarray) -> List[Block]:
    out: List[Block] = []
    t = 0
    while t < want.size:
        if want[t]:
            s = t
            while t + 1 < want.size and want[t + 1]:
                t += 1
            out.append((s, t))
        t += 1
    return out


def _merge_close(blocks: List[Block], initially_on: bool) -> List[Block]:
    """Blocks closer than two idle hours leave no room for shutdown then startup."""
    merged: List[Block] = []
    for s, e in blocks:
        if merged and s - merged[-1][1] <= 2:
            merged[-1] = (merged[-1][0], e)
        elif not merged and initially_on and s <= 1:
            merged.append((0, e))
        else:
            merged.append((s, e))
    return merged


def _fit_block(
    s: int,
    e: int,
    cap: np.ndarray,
    upper: np.ndarray,
    c_min: float,
    ramp: float,
    start_power: float,
    must_stop: bool,
    end_cap: Optional[float] = None,
) -> Optional[np.ndarray]:
    """Powers for producing hours s..e, or None when the ramp limits cannot be met."""
    n = e - s + 1
    lo = np.empty(n)
    hi = np.empty(n)
    prev_lo = prev_hi = start_power
    for k in range(n):
        lo[k] = max(c_min, prev_lo - ramp)
        hi[k] = min(upper[s + k], prev_hi + ramp)
        if lo[k] > hi[k]:
            return None
        prev_lo, prev_hi = lo[k], hi[k]
    if must_stop:
        hi[-1] = min(hi[-1], ramp)
    elif end_cap is not None:
        hi[-1] = min(hi[-1], end_cap)
    for k in range(n - 2, -1, -1):
        lo[k] = max(lo[k], lo[k + 1] - ramp)
        hi[k] = min(hi[k], hi[k + 1] + ramp)
    if np.any(lo > hi + 1e-12):
        return None

    p = np.empty(n)
    prev = start_power
    for k in range(n):
        a = max(lo[k], prev - ramp)
        b = min(hi[k], prev + ramp)
        p[k] = min(max(cap[s + k], a), b)
        prev = p[k]
    return p


def warm_start_heuristic(problem: ScheduleProblem) -> Schedule:
    """Feasible schedule built greedily; falls back to all modules off."""
    T, M = problem.horizon, problem.n_modules
    spec = problem.spec
    C, c_min, ramp, c_su = spec.c_max, spec.c_min, spec.ramp_limit, spec.startup_energy
    share = problem.availabilities / M
    upper = np.minimum(share, C)

    _, peak_eff = peak_efficiency(problem.pwl, C)
    favoured = spec.hydrogen_price * peak_eff > problem.prices
    target = np.where(favoured, problem.availabilities, np.maximum(problem.availabilities - problem.export_limits, 0.0))
    cap = np.minimum(target / M, C)
    want = cap >= c_min

    p_e = np.zeros((T, M))
    z_on = np.zeros((T, M))
    z_su = np.zeros((T, M))

    for m in range(M):
        on0 = problem.fleet.initial_on_state[m]
        p0 = problem.fleet.initial_power[m]
        module_want = want.copy()
        if on0 and p0 > ramp:
            # cannot switch off at hour 0
            module_want[0] = True
        for s, e in _merge_close(_blocks(module_want), on0):
            continues = on0 and s == 0
            if not continues:
                # startup hour s - 1 needs the module off before it and room for the startup energy
                while s <= e and (s == 0 or c_su > share[s - 1] + 1e-12 or (s == 1 and on0)):
                    s += 1
                if s > e or ramp < c_min:
                    continue
            start_power = p0 if continues else 0.0
            powers = _fit_block(
                s, e, cap, upper, c_min, ramp, start_power, must_stop=e < T - 1, end_cap=problem.terminal_power_cap
            )
            if powers is None:
                if continues and p0 > ramp:
                    logger.warning(f"Warm start cannot keep module {m} within its ramp limits")
                    return empty_schedule(problem)
                continue
            p_e[s : e + 1, m] = powers
            z_on[s : e + 1, m] = 1.0
            if not continues:
                z_on[s - 1, m] = 1.0
                z_su[s - 1, m] = 1.0

    h = np.where(p_e > 0, problem.pwl.evaluate(p_e.ravel(), C).reshape(T, M), 0.0)
    p_su = c_su * z_su
    leftover = problem.availabilities - p_e.sum(axis=1) - p_su.sum(axis=1)
    p_grid = np.where(problem.prices > 0, np.clip(np.minimum(problem.export_limits, leftover), 0.0, None), 0.0)

    schedule = Schedule(
        p_grid=p_grid,
        p_e=p_e,
        h=h,
        p_su=p_su,
        z_on=z_on,
        z_su=z_su,
        objective_value=schedule_objective(problem, p_grid, h),
    )
    audit = verify_schedule(problem, schedule)
    if not audit.passed:
        logger.warning(f"Warm start failed its audit ({audit.worst_family()}); using all-off schedule")
        return empty_schedule(problem)
    logger.debug(
        f"Warm start: {int(z_su.sum())} startups, {int(np.count_nonzero(p_e))} producing module-hours, "
        f"objective {schedule.objective_value:.2f}"
    )
    return schedule
