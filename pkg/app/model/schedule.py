"""
Schedules: extraction from solver vectors and the independent feasibility audit.

The audit re-evaluates every constraint family from the schedule arrays alone,
without the MILP matrix, so it also checks the model builder.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from app.errors import ScheduleError
from app.model.milp import VariableIndex
from app.model.problem import ScheduleProblem

logger = logging.getLogger(__name__)

INTEGRALITY_TOL = 1e-6
FEASIBILITY_TOL = 1e-6
OBJECTIVE_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class Schedule:
    """Hourly dispatch of the plant; module arrays have shape (T, M)."""

    p_grid: np.ndarray
    p_e: np.ndarray
    h: np.ndarray
    p_su: np.ndarray
    z_on: np.ndarray
    z_su: np.ndarray
    objective_value: float

    def __post_init__(self) -> None:
        p_grid = np.array(self.p_grid, dtype=float).reshape(-1)
        shape = (p_grid.size, np.asarray(self.p_e).reshape(p_grid.size, -1).shape[1])
        arrays = {"p_grid": p_grid}
        for name in ("p_e", "h", "p_su"):
            arrays[name] = np.array(getattr(self, name), dtype=float).reshape(shape)
        for name in ("z_on", "z_su"):
            arrays[name] = np.array(getattr(self, name)).astype(bool).reshape(shape)
        for name, arr in arrays.items():
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "objective_value", float(self.objective_value))

    @property
    def horizon(self) -> int:
        return int(self.p_grid.size)

    @property
    def n_modules(self) -> int:
        return int(self.p_e.shape[1])

    @property
    def total_power(self) -> np.ndarray:
        """Electrolyzer consumption per hour (startup energy excluded)."""
        return self.p_e.sum(axis=1)

    @property
    def total_hydrogen(self) -> np.ndarray:
        return self.h.sum(axis=1)

    def to_vector(self, index: VariableIndex) -> np.ndarray:
        return index.pack(
            {
                "h": self.h,
                "p_e": self.p_e,
                "p_su": self.p_su,
                "z_on": self.z_on.astype(float),
                "z_su": self.z_su.astype(float),
                "p_grid": self.p_grid,
            }
        )

    def final_state(self) -> tuple:
        """(on-state, power) of every module in the last hour."""
        on = tuple(bool(v) for v in self.z_on[-1])
        return on, tuple(float(p) if o else 0.0 for o, p in zip(on, self.p_e[-1]))


def schedule_objective(problem: ScheduleProblem, p_grid: np.ndarray, h: np.ndarray) -> float:
    return float(np.dot(problem.prices, p_grid) + problem.spec.hydrogen_price * np.sum(h))


def empty_schedule(problem: ScheduleProblem) -> Schedule:
    """All modules off, nothing sold."""
    T, M = problem.horizon, problem.n_modules
    zeros = np.zeros((T, M))
    return Schedule(np.zeros(T), zeros, zeros, zeros, zeros, zeros, 0.0)


def extract_schedule(
    problem: ScheduleProblem, x: Sequence[float], solver_objective: Optional[float] = None
) -> Schedule:
    """Turn a solver vector into a Schedule, rounding binaries and clipping negatives."""
    index = VariableIndex(problem.horizon, problem.n_modules)
    vec = np.asarray(x, dtype=float)
    if vec.shape != (index.n_variables,):
        raise ScheduleError(f"solution has {vec.size} entries, expected {index.n_variables}")

    blocks = index.unpack(vec)
    for name in ("z_on", "z_su"):
        z = blocks[name]
        off = np.abs(z - np.round(z))
        if np.any(off > INTEGRALITY_TOL):
            t, m = np.unravel_index(int(np.argmax(off)), z.shape)
            raise ScheduleError(f"fractional binary {name}[{t},{m}] = {z[t, m]:.6g}")
        blocks[name] = np.round(z)
    for name in ("h", "p_e", "p_su", "p_grid"):
        blocks[name] = np.clip(blocks[name], 0.0, None)

    objective = schedule_objective(problem, blocks["p_grid"], blocks["h"])
    if solver_objective is not None:
        if abs(objective - solver_objective) > OBJECTIVE_RTOL * max(1.0, abs(objective)):
            raise ScheduleError(
                f"recomputed objective {objective:.9g} differs from solver objective {solver_objective:.9g}"
            )

    return Schedule(
        p_grid=blocks["p_grid"],
        p_e=blocks["p_e"],
        h=blocks["h"],
        p_su=blocks["p_su"],
        z_on=blocks["z_on"],
        z_su=blocks["z_su"],
        objective_value=objective,
    )


def concat_schedules(parts: List[Schedule]) -> Schedule:
    """Join consecutive window schedules into one horizon."""
    if not parts:
        raise ScheduleError("no schedules to join")
    return Schedule(
        p_grid=np.concatenate([s.p_grid for s in parts]),
        p_e=np.vstack([s.p_e for s in parts]),
        h=np.vstack([s.h for s in parts]),
        p_su=np.vstack([s.p_su for s in parts]),
        z_on=np.vstack([s.z_on for s in parts]),
        z_su=np.vstack([s.z_su for s in parts]),
        objective_value=sum(s.objective_value for s in parts),
    )


class ScheduleAudit(BaseModel):
    """Result of verify_schedule. Residuals are positive parts of violations."""

    residuals: Dict[str, float]
    max_violation: float
    objective: float
    hydrogen_tightness_gap: float = Field(0.0, description="Largest relative |h - pwl(p_e)| over producing hours")
    producing_hours: int = 0
    startup_consistent: bool = True
    tightness_required: bool = True
    tolerance: float = FEASIBILITY_TOL

    @property
    def feasible(self) -> bool:
        return self.max_violation <= self.tolerance

    @property
    def hydrogen_tight(self) -> bool:
        return not self.tightness_required or self.hydrogen_tightness_gap <= self.tolerance

    @property
    def passed(self) -> bool:
        return self.feasible and self.hydrogen_tight and self.startup_consistent

    def worst_family(self) -> str:
        return max(self.residuals, key=lambda k: self.residuals[k])


def _positive_max(values: np.ndarray) -> float:
    return float(max(0.0, np.max(values))) if values.size else 0.0


def verify_schedule(
    problem: ScheduleProblem, schedule: Schedule, tolerance: float = FEASIBILITY_TOL
) -> ScheduleAudit:
    """Re-check every constraint family of the model against a schedule.

    kg-valued rows (the hydrogen curve) are scaled by max(1, |value|); all other
    residuals are absolute.
    """
    T, M = problem.horizon, problem.n_modules
    if schedule.horizon != T or schedule.n_modules != M:
        raise ScheduleError(
            f"schedule shape ({schedule.horizon}, {schedule.n_modules}) does not match problem ({T}, {M})"
        )
    spec, pwl = problem.spec, problem.pwl
    C = spec.c_max
    p, h, p_su, p_grid = schedule.p_e, schedule.h, schedule.p_su, schedule.p_grid
    z_on = schedule.z_on.astype(float)
    z_su = schedule.z_su.astype(float)
    y = z_on - z_su

    on_prev = np.vstack([np.array(problem.fleet.initial_on_state, dtype=float)[None, :], z_on[:-1]])
    p_prev = np.vstack([np.array(problem.fleet.initial_power, dtype=float)[None, :], p[:-1]])

    # (T, M, |I|) segment right-hand sides
    rhs = p[:, :, None] * pwl.slopes + pwl.intercepts * C * y[:, :, None]
    hydro = (h[:, :, None] - rhs) / np.maximum(1.0, np.abs(rhs))

    residuals = {
        "hydrogen_curve": _positive_max(hydro),
        "operating_range": _positive_max(np.maximum(spec.c_min * y - p, p - C * y)),
        "export_limit": _positive_max(p_grid - problem.export_limits),
        "ramp_up": _positive_max(p - p_prev - spec.ramp_limit),
        "ramp_down": _positive_max(p_prev - p - spec.ramp_limit),
        "startup_logic_a": _positive_max(z_su + on_prev - 1.0),
        "startup_logic_b": _positive_max(z_su - z_on),
        "startup_logic_c": _positive_max(z_on - on_prev - z_su),
        "startup_cost": float(np.max(np.abs(p_su - spec.startup_energy * z_su))) if p_su.size else 0.0,
        "power_balance": _positive_max(p_grid + p.sum(axis=1) + p_su.sum(axis=1) - problem.availabilities),
        "bounds": max(
            _positive_max(-np.concatenate([p.ravel(), h.ravel(), p_su.ravel(), p_grid])),
            _positive_max(p - C),
        ),
    }
    if problem.terminal_power_cap is not None:
        residuals["terminal_cap"] = _positive_max(p[-1] - problem.terminal_power_cap)

    producing = p > 0
    gap = 0.0
    if np.any(producing):
        curve = pwl.evaluate(p[producing], C)
        gap = float(np.max(np.abs(h[producing] - curve) / np.maximum(1.0, np.abs(curve))))

    startup_ok = bool(np.array_equal(z_su, np.maximum(0.0, z_on - on_prev)))
    objective = schedule_objective(problem, p_grid, h)

    audit = ScheduleAudit(
        residuals=residuals,
        max_violation=max(residuals.values()),
        objective=objective,
        hydrogen_tightness_gap=gap,
        producing_hours=int(np.count_nonzero(producing.any(axis=1))),
        startup_consistent=startup_ok,
        tightness_required=spec.hydrogen_price > 0,
        tolerance=tolerance,
    )
    if not audit.passed:
        logger.warning(
            f"Schedule audit failed: worst family {audit.worst_family()} = {audit.max_violation:.3g}, "
            f"tightness gap {gap:.3g}, startup consistent {startup_ok}"
        )
    return audit
