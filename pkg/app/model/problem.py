"""
Complete scheduling problem: market data, fleet and PWL approximation with the
per-hour export limits and availabilities derived from the market.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from app.curve.pwl import PwlCurve
from app.errors import ProblemError
from app.market.records import MarketSeries
from app.model.fleet import ElectrolyzerSpec, FleetConfig

logger = logging.getLogger(__name__)

HOURS_PER_DAY = 24


def _readonly(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScheduleProblem:
    market: MarketSeries
    fleet: FleetConfig
    pwl: PwlCurve
    prices: np.ndarray
    export_limits: np.ndarray
    availabilities: np.ndarray
    terminal_power_cap: Optional[float] = None

    def __post_init__(self) -> None:
        T = self.market.horizon
        for name in ("prices", "export_limits", "availabilities"):
            arr = _readonly(getattr(self, name))
            if arr.shape != (T,):
                raise ProblemError(f"{name} has shape {arr.shape}, expected ({T},)")
            object.__setattr__(self, name, arr)
        over = np.nonzero(self.export_limits > self.availabilities + 1e-9)[0]
        if over.size:
            raise ProblemError(f"export limit exceeds availability at hour {int(over[0])}")
        if self.terminal_power_cap is not None and self.terminal_power_cap < 0:
            raise ProblemError(f"terminal power cap must be non-negative, got {self.terminal_power_cap}")

    @property
    def horizon(self) -> int:
        return self.market.horizon

    @property
    def n_modules(self) -> int:
        return self.fleet.n_modules

    @property
    def spec(self) -> ElectrolyzerSpec:
        return self.fleet.spec

    def with_initial_state(self, on: Sequence[bool], power: Sequence[float]) -> "ScheduleProblem":
        fleet = self.fleet.with_initial_state(tuple(on), tuple(power))
        return build_problem(self.market, fleet, self.pwl, self.terminal_power_cap)


def build_problem(
    market: MarketSeries, fleet: FleetConfig, pwl: PwlCurve, terminal_power_cap: Optional[float] = None
) -> ScheduleProblem:
    """Validate the inputs against each other and derive the hourly limits.

    `terminal_power_cap` bounds every module's power in the last hour (MW).
    """
    if market.horizon == 0:
        raise ProblemError("market horizon is empty")
    if pwl.n_segments == 0:
        raise ProblemError("PWL curve has no segments")
    if fleet.spec.c_min_fraction < pwl.x_min - 1e-12:
        raise ProblemError(
            f"minimum load fraction {fleet.spec.c_min_fraction} lies below the fitted range "
            f"starting at {pwl.x_min}"
        )

    problem = ScheduleProblem(
        market=market,
        fleet=fleet,
        pwl=pwl,
        prices=market.cleared_prices,
        export_limits=market.export_limits,
        availabilities=market.availabilities,
        terminal_power_cap=terminal_power_cap,
    )
    logger.debug(
        f"Built problem T={problem.horizon} M={problem.n_modules} "
        f"c_max={fleet.spec.c_max:g} segments={pwl.n_segments}"
    )
    return problem


def handoff_power_cap(spec: ElectrolyzerSpec, n_modules: int, next_availability: float) -> float:
    """Highest last-hour module power from which the next hour stays feasible.

    A module above the ramp limit cannot switch off, so it needs at least
    max(c_min, p - ramp) in the next hour; with every module at or below
    ramp + availability / n_modules the fleet fits the next hour's wind.
    """
    share = next_availability / n_modules
    cap = spec.ramp_limit + share if share >= spec.c_min else spec.ramp_limit
    return min(cap, spec.c_max)


def split_by_day(problem: ScheduleProblem, hours: int = HOURS_PER_DAY) -> List[ScheduleProblem]:
    """Cut the horizon into consecutive windows of `hours` (the last may be shorter).

    Every window keeps the fleet's initial state; a chained solve replaces it
    with the previous window's final state. All windows but the last carry a
    terminal power cap derived from the availability of the hour after them.
    """
    if hours < 1:
        raise ProblemError(f"window length must be positive, got {hours}")
    windows = []
    for start in range(0, problem.horizon, hours):
        stop = min(start + hours, problem.horizon)
        cap = problem.terminal_power_cap
        if stop < problem.horizon:
            cap = handoff_power_cap(problem.spec, problem.n_modules, float(problem.availabilities[stop]))
        windows.append(build_problem(problem.market.window(start, stop), problem.fleet, problem.pwl, cap))
    return windows
