"""
Scenario runner: curve -> PWL -> problem -> MILP -> solve -> audit -> metrics.
"""
import hashlib
import logging
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from app.config import PlantConfig, SolverSection
from app.curve.production import ProductionCurve, load_curve_points, reference_curve
from app.curve.pwl import PwlCurve, fit_concave_pwl, peak_efficiency
from app.errors import ProblemError, SolverError, VerificationError
from app.market.ingest import load_demo_market, parse_market_csv
from app.market.records import MarketSeries
from app.model.fleet import ElectrolyzerSpec, FleetConfig
from app.model.milp import build_milp, write_lp_file
from app.model.problem import ScheduleProblem, build_problem, split_by_day
from app.model.schedule import Schedule, ScheduleAudit, concat_schedules, verify_schedule
from app.solver.backends import get_backend
from app.solver.branch_and_bound import MipOptions, MipResult, MipStatus, relative_gap

logger = logging.getLogger(__name__)

MarketSource = Union[MarketSeries, str, Path, None]
CurveSource = Union[ProductionCurve, str, Path, None]


class SegmentChoice(NamedTuple):
    """A segment count with an optional fit mode of its own."""

    segments: int
    fit_mode: Optional[str] = None


class HourlySeries(BaseModel):
    price_usd_mwh: List[float]
    availability_mw: List[float]
    export_limit_mw: List[float]
    p_grid_mw: List[float]
    total_power_mw: List[float]
    total_hydrogen_kg: List[float]
    startup_energy_mwh: List[float]
    module_power_mw: List[List[float]] = Field(..., description="[hour][module]")
    module_hydrogen_kg: List[List[float]] = Field(..., description="[hour][module]")
    module_on: List[List[bool]] = Field(..., description="[hour][module]")


class SolveStats(BaseModel):
    backend: str
    status: MipStatus
    objective: float
    best_bound: float
    gap: float
    node_count: int
    seconds: float
    day_split: bool = False
    max_violation: float
    hydrogen_tightness_gap: float


class ScenarioResult(BaseModel):
    label: str
    n_modules: int
    module_capacity_mw: float
    segments: int
    fit_mode: str
    hydrogen_price_usd_kg: float
    market_digest: str
    horizon: int
    total_power_mwh: float
    total_hydrogen_kg: float
    total_revenue_usd: float
    grid_revenue_usd: float
    hydrogen_revenue_usd: float
    startup_energy_mwh: float
    fleet_min_power_mw: float
    operating_hours: int
    peak_proximity: float
    hourly: HourlySeries
    solve: SolveStats

    @property
    def total_capacity_mw(self) -> float:
        return self.n_modules * self.module_capacity_mw


def market_digest(market: MarketSeries) -> str:
    rows = ";".join(
        f"{r.hour_index},{r.bid_price!r},{r.cleared_price!r},{r.hsl!r},{r.lsl!r},{r.cleared_power!r}"
        for r in market.records
    )
    return hashlib.sha256(rows.encode("utf-8")).hexdigest()[:16]


def resolve_market(config: PlantConfig, market: MarketSource = None) -> MarketSeries:
    if isinstance(market, MarketSeries):
        return market
    path = market or config.market.path
    return parse_market_csv(path) if path else load_demo_market()


def resolve_curve(config: PlantConfig, curve: CurveSource = None) -> ProductionCurve:
    if isinstance(curve, ProductionCurve):
        return curve
    source = curve or config.curve.source
    if source:
        return load_curve_points(source)
    c = config.curve
    return reference_curve(alpha=c.alpha, beta=c.beta, gamma=c.gamma, x_min=c.x_min, n_samples=c.n_samples)


def build_fleet(config: PlantConfig) -> FleetConfig:
    f, e = config.fleet, config.electrolyzer
    spec = ElectrolyzerSpec(
        c_max=f.module_capacity_mw,
        c_min_fraction=e.c_min_fraction,
        ramp_fraction=e.ramp_fraction,
        startup_energy_fraction=e.startup_energy_fraction,
        hydrogen_price=e.hydrogen_price_usd_kg,
    )
    return FleetConfig(
        n_modules=f.n_modules,
        spec=spec,
        initial_on_state=tuple(f.initial_on_state),
        initial_power=tuple(f.initial_power_mw),
    )


def mip_options(solver: SolverSection) -> MipOptions:
    return MipOptions(
        relative_gap=solver.relative_gap,
        integrality_tolerance=solver.integrality_tolerance,
        node_limit=solver.node_limit,
        time_limit=solver.time_limit,
        lp_engine=solver.lp_engine,
    )


def _solve_window(problem: ScheduleProblem, solver: SolverSection, dump_lp: Optional[Path]) -> MipResult:
    instance = build_milp(problem)
    if dump_lp is not None:
        write_lp_file(instance, dump_lp)
    result = get_backend(solver.backend).solve(instance, mip_options(solver))
    if result.schedule is None:
        raise SolverError(f"no feasible schedule found ({result.status.value} after {result.node_count} nodes)")
    return result


def solve_problem(
    problem: ScheduleProblem, solver: SolverSection, dump_lp: Optional[Path] = None
) -> Tuple[Schedule, SolveStats, ScheduleAudit]:
    """Solve the whole horizon at once or as chained 24-hour windows."""
    if not solver.day_split:
        result = _solve_window(problem, solver, dump_lp)
        schedule = result.schedule
        assert schedule is not None
        parts = [result]
    else:
        parts, schedules = [], []
        state = None
        for day, window in enumerate(split_by_day(problem)):
            if state is not None:
                window = window.with_initial_state(*state)
            window_dump = dump_lp.with_name(f"{dump_lp.stem}_day{day}{dump_lp.suffix}") if dump_lp else None
            result = _solve_window(window, solver, window_dump)
            assert result.schedule is not None
            parts.append(result)
            schedules.append(result.schedule)
            state = result.schedule.final_state()
            logger.info(f"Day {day}: {result.status.value}, objective {result.objective:.2f}")
        schedule = concat_schedules(schedules)

    audit = verify_schedule(problem, schedule)
    statuses = [p.status for p in parts]
    worst = MipStatus.LIMIT_HIT if MipStatus.LIMIT_HIT in statuses else statuses[0]
    if worst != MipStatus.LIMIT_HIT and MipStatus.GAP_REACHED in statuses:
        worst = MipStatus.GAP_REACHED
    bound = sum(p.best_bound for p in parts)
    stats = SolveStats(
        backend=parts[0].backend,
        status=worst,
        objective=schedule.objective_value,
        best_bound=bound,
        gap=relative_gap(schedule.objective_value, bound),
        node_count=sum(p.node_count for p in parts),
        seconds=sum(p.seconds for p in parts),
        day_split=solver.day_split,
        max_violation=audit.max_violation,
        hydrogen_tightness_gap=audit.hydrogen_tightness_gap,
    )
    return schedule, stats, audit


def peak_proximity(schedule: Schedule, pwl: PwlCurve, c_max: float) -> float:
    """Share of producing module-hours within one breakpoint spacing of the PWL efficiency peak."""
    producing = schedule.p_e > 0
    if not np.any(producing):
        return 0.0
    x_peak, _ = peak_efficiency(pwl, 1.0)
    spacing = float(np.min(np.diff(pwl.breakpoints))) if len(pwl.breakpoints) >= 2 else 1.0
    loads = schedule.p_e[producing] / c_max
    return float(np.mean(np.abs(loads - x_peak) <= spacing + 1e-12))


def summarize(
    label: str,
    problem: ScheduleProblem,
    schedule: Schedule,
    stats: SolveStats,
    segments: int,
    fit_mode: str,
) -> ScenarioResult:
    spec = problem.spec
    grid_revenue = float(np.dot(problem.prices, schedule.p_grid))
    hydrogen = float(schedule.h.sum())
    producing_hours = int(np.count_nonzero((schedule.p_e > 0).any(axis=1)))
    hourly = HourlySeries(
        price_usd_mwh=problem.prices.tolist(),
        availability_mw=problem.availabilities.tolist(),
        export_limit_mw=problem.export_limits.tolist(),
        p_grid_mw=schedule.p_grid.tolist(),
        total_power_mw=schedule.total_power.tolist(),
        total_hydrogen_kg=schedule.total_hydrogen.tolist(),
        startup_energy_mwh=schedule.p_su.sum(axis=1).tolist(),
        module_power_mw=schedule.p_e.tolist(),
        module_hydrogen_kg=schedule.h.tolist(),
        module_on=schedule.z_on.tolist(),
    )
    return ScenarioResult(
        label=label,
        n_modules=problem.n_modules,
        module_capacity_mw=spec.c_max,
        segments=segments,
        fit_mode=fit_mode,
        hydrogen_price_usd_kg=spec.hydrogen_price,
        market_digest=market_digest(problem.market),
        horizon=problem.horizon,
        total_power_mwh=float(schedule.p_e.sum()),
        total_hydrogen_kg=hydrogen,
        total_revenue_usd=schedule.objective_value,
        grid_revenue_usd=grid_revenue,
        hydrogen_revenue_usd=spec.hydrogen_price * hydrogen,
        startup_energy_mwh=float(schedule.p_su.sum()),
        fleet_min_power_mw=problem.n_modules * spec.c_min,
        operating_hours=producing_hours,
        peak_proximity=peak_proximity(schedule, problem.pwl, spec.c_max),
        hourly=hourly,
        solve=stats,
    )


def run_scenario(
    config: PlantConfig,
    market: MarketSource = None,
    curve: CurveSource = None,
    label: Optional[str] = None,
    dump_lp: Optional[Path] = None,
) -> ScenarioResult:
    """Run one configuration end to end; refuses to return an unverified schedule."""
    label = label or f"{config.fleet.n_modules}x{config.fleet.module_capacity_mw:g}MW_{config.curve.segments}seg"
    logger.info(f"Scenario {label}: starting")
    series = resolve_market(config, market)
    production = resolve_curve(config, curve)
    pwl = fit_concave_pwl(production, config.curve.segments, mode=config.curve.fit_mode)
    problem = build_problem(series, build_fleet(config), pwl)

    schedule, stats, audit = solve_problem(problem, config.solver, dump_lp)
    if not audit.passed:
        raise VerificationError(
            f"scenario {label}: schedule failed verification "
            f"(worst {audit.worst_family()} = {audit.max_violation:.3g}, "
            f"tightness gap {audit.hydrogen_tightness_gap:.3g}, startup consistent {audit.startup_consistent})",
            audit=audit,
        )

    result = summarize(label, problem, schedule, stats, config.curve.segments, config.curve.fit_mode)
    logger.info(
        f"Scenario {label}: revenue {result.total_revenue_usd:.2f} USD, hydrogen {result.total_hydrogen_kg:.2f} kg, "
        f"power {result.total_power_mwh:.2f} MWh, status {stats.status.value}"
    )
    return result


def variant(
    config: PlantConfig,
    n_modules: int,
    segments: Optional[int] = None,
    total_capacity: Optional[float] = None,
    fit_mode: Optional[str] = None,
    c_min_fraction: Optional[float] = None,
) -> PlantConfig:
    """Copy of config with the fleet split into n_modules at fixed total capacity."""
    total = total_capacity or config.fleet.n_modules * config.fleet.module_capacity_mw
    data = config.model_dump()
    data["fleet"].update(
        n_modules=n_modules,
        module_capacity_mw=total / n_modules,
        initial_on_state=[],
        initial_power_mw=[],
    )
    if segments is not None:
        data["curve"]["segments"] = segments
    if fit_mode is not None:
        data["curve"]["fit_mode"] = fit_mode
    if c_min_fraction is not None:
        data["electrolyzer"]["c_min_fraction"] = c_min_fraction
    return PlantConfig(**data)


def run_sweep(
    config: PlantConfig,
    modules: Sequence[int],
    segments: Sequence[Union[int, SegmentChoice]],
    market: MarketSource = None,
    curve: CurveSource = None,
    total_capacity: Optional[float] = None,
    fit_mode: Optional[str] = None,
) -> Dict[int, List[ScenarioResult]]:
    """Results per segment count for every module count at fixed total capacity.

    A SegmentChoice with its own fit mode overrides `fit_mode` for that count.
    """
    series = resolve_market(config, market)
    production = resolve_curve(config, curve)
    out: Dict[int, List[ScenarioResult]] = {}
    for entry in segments:
        choice = entry if isinstance(entry, SegmentChoice) else SegmentChoice(int(entry))
        if choice.segments in out:
            raise ProblemError(f"segment count {choice.segments} requested twice")
        mode = choice.fit_mode or fit_mode
        out[choice.segments] = [
            run_scenario(variant(config, m, choice.segments, total_capacity, mode), series, production)
            for m in modules
        ]
    return out
