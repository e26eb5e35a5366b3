import io
import logging
from typing import Any, Dict, List, Literal, Optional

from fastapi import APIRouter
from pydantic import BaseModel, Field, ValidationError

from app.config import PlantConfig, load_config, update_config
from app.curve.production import ProductionCurve, reference_curve
from app.curve.pwl import approximation_error, fit_concave_pwl, peak_efficiency
from app.errors import ConfigError
from app.experiments.outputs import metrics_dict
from app.experiments.scenario import run_scenario
from app.market.ingest import parse_market_csv

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["scenarios"])


class ConfigUpdate(BaseModel):
    """Per-section patch; omitted sections are left alone."""
    fleet: Optional[Dict[str, Any]] = None
    electrolyzer: Optional[Dict[str, Any]] = None
    curve: Optional[Dict[str, Any]] = None
    market: Optional[Dict[str, Any]] = None
    solver: Optional[Dict[str, Any]] = None
    output: Optional[Dict[str, Any]] = None
    logging: Optional[Dict[str, Any]] = None
    tags: Optional[List[str]] = None


class RunRequest(BaseModel):
    """Scenario run against the stored config, optionally patched."""
    overrides: ConfigUpdate = ConfigUpdate()
    market_csv: Optional[str] = Field(None, description="Market file contents; omitted uses the configured market")
    label: Optional[str] = None
    include_hourly: bool = True


class CurvePoint(BaseModel):
    load_fraction: float
    h_norm_kg_per_hour_per_mw: float


class FitRequest(BaseModel):
    segments: int = Field(88, ge=1)
    fit_mode: Literal["secant", "origin-hull"] = "secant"
    points: Optional[List[CurvePoint]] = None
    alpha: float = 22.0
    beta: float = 6.0
    gamma: float = 0.54
    x_min: float = Field(0.10, gt=0, lt=1)


def _patched(base: PlantConfig, update: ConfigUpdate) -> PlantConfig:
    data = base.model_dump()
    for key, value in update.model_dump(exclude_none=True).items():
        if isinstance(value, dict):
            data[key].update(value)
        else:
            data[key] = value
    try:
        return PlantConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid overrides: {e.errors()[0]['msg']}")


@router.get("/scenarios/config")
def get_config() -> PlantConfig:
    """Current scenario configuration."""
    return load_config()


@router.post("/scenarios/config")
def post_config(config_update: ConfigUpdate) -> PlantConfig:
    """Patch and persist the scenario configuration."""
    return update_config(config_update.model_dump(exclude_none=True))


@router.post("/scenarios/run")
def run(request: RunRequest) -> Dict[str, Any]:
    """Solve one scenario and return its verified metrics."""
    config = _patched(load_config(), request.overrides)
    market = parse_market_csv(io.StringIO(request.market_csv)) if request.market_csv else None
    result = run_scenario(config, market=market, label=request.label)
    body = metrics_dict(result)
    if request.include_hourly:
        body["hourly"] = result.hourly.model_dump()
    return body


@router.post("/curves/fit")
def fit_curve(request: FitRequest) -> Dict[str, Any]:
    """Fit a concave PWL to posted samples or the reference curve."""
    if request.points:
        curve = ProductionCurve(
            x=[p.load_fraction for p in request.points],
            h_norm=[p.h_norm_kg_per_hour_per_mw for p in request.points],
        )
    else:
        curve = reference_curve(alpha=request.alpha, beta=request.beta, gamma=request.gamma, x_min=request.x_min)
    pwl = fit_concave_pwl(curve, request.segments, mode=request.fit_mode)
    x_peak, eff_peak = peak_efficiency(pwl)
    return {
        "mode": pwl.mode,
        "x_min": pwl.x_min,
        "anchor_slope": pwl.anchor_slope,
        "segments": pwl.to_rows(),
        "error": approximation_error(curve, pwl),
        "peak_load_fraction": x_peak,
        "peak_kg_per_mwh": eff_peak,
    }
