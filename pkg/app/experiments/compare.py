"""
Comparison tables across fleet configurations.
"""
import logging
import math
from typing import List, Sequence

from pydantic import BaseModel

from app.errors import ProblemError
from app.experiments.scenario import ScenarioResult

logger = logging.getLogger(__name__)

CAPACITY_TOL = 1e-6


class ComparisonRow(BaseModel):
    label: str
    n_modules: int
    module_capacity_mw: float
    segments: int
    total_power_mwh: float
    power_increase_pct: float
    total_hydrogen_kg: float
    hydrogen_increase_pct: float
    total_revenue_usd: float
    revenue_increase_pct: float


class ComparisonTable(BaseModel):
    baseline: str
    rows: List[ComparisonRow]


def percent_increase(value: float, baseline: float) -> float:
    if baseline == 0:
        return 0.0 if value == 0 else math.copysign(math.inf, value)
    return 100.0 * (value - baseline) / abs(baseline)


def _check_comparable(results: Sequence[ScenarioResult]) -> None:
    first = results[0]
    for r in results[1:]:
        if r.market_digest != first.market_digest:
            raise ProblemError(f"{r.label} uses different market data than {first.label}")
        if r.segments != first.segments or r.fit_mode != first.fit_mode:
            raise ProblemError(f"{r.label} uses a different PWL fit than {first.label}")
        if abs(r.total_capacity_mw - first.total_capacity_mw) > CAPACITY_TOL * max(1.0, first.total_capacity_mw):
            raise ProblemError(
                f"{r.label} has {r.total_capacity_mw:g} MW total capacity, {first.label} has "
                f"{first.total_capacity_mw:g} MW"
            )


def compare_configurations(results: Sequence[ScenarioResult]) -> ComparisonTable:
    """Percent increases of power, hydrogen and revenue over the fewest-modules result."""
    if not results:
        raise ProblemError("nothing to compare")
    _check_comparable(results)
    ordered = sorted(results, key=lambda r: r.n_modules)
    base = ordered[0]
    rows = [
        ComparisonRow(
            label=r.label,
            n_modules=r.n_modules,
            module_capacity_mw=r.module_capacity_mw,
            segments=r.segments,
            total_power_mwh=r.total_power_mwh,
            power_increase_pct=percent_increase(r.total_power_mwh, base.total_power_mwh),
            total_hydrogen_kg=r.total_hydrogen_kg,
            hydrogen_increase_pct=percent_increase(r.total_hydrogen_kg, base.total_hydrogen_kg),
            total_revenue_usd=r.total_revenue_usd,
            revenue_increase_pct=percent_increase(r.total_revenue_usd, base.total_revenue_usd),
        )
        for r in ordered
    ]
    logger.info(f"Compared {len(rows)} configurations against baseline {base.label}")
    return ComparisonTable(baseline=base.label, rows=rows)


class HourDetailRow(BaseModel):
    label: str
    segments: int
    fit_mode: str
    n_modules: int
    hour: int
    price_usd_mwh: float
    power_mw: float
    hydrogen_kg: float
    grid_sale_mw: float
    hydrogen_profit_usd: float
    total_profit_usd: float


class HourDetailTable(BaseModel):
    hour: int
    rows: List[HourDetailRow]


def hour_detail(results: Sequence[ScenarioResult], hour: int) -> HourDetailTable:
    """Per-configuration power, hydrogen and profit at one hour.

    Profit is reported both as hydrogen revenue alone and including the
    hour's grid sale.
    """
    if not results:
        raise ProblemError("no results for hour detail")
    rows = []
    for r in sorted(results, key=lambda r: (r.segments, r.fit_mode, r.n_modules)):
        if not 0 <= hour < r.horizon:
            raise ProblemError(f"hour {hour} outside horizon 0..{r.horizon - 1} of {r.label}")
        s = r.hourly
        hydrogen = s.total_hydrogen_kg[hour]
        hydrogen_profit = r.hydrogen_price_usd_kg * hydrogen
        rows.append(
            HourDetailRow(
                label=r.label,
                segments=r.segments,
                fit_mode=r.fit_mode,
                n_modules=r.n_modules,
                hour=hour,
                price_usd_mwh=s.price_usd_mwh[hour],
                power_mw=s.total_power_mw[hour],
                hydrogen_kg=hydrogen,
                grid_sale_mw=s.p_grid_mw[hour],
                hydrogen_profit_usd=hydrogen_profit,
                total_profit_usd=hydrogen_profit + s.price_usd_mwh[hour] * s.p_grid_mw[hour],
            )
        )
    return HourDetailTable(hour=hour, rows=rows)
