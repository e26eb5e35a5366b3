from pydantic import BaseModel, Field, ValidationError
from typing import Literal, Optional, Dict, Any, List
from pathlib import Path
import os, json, logging

from dotenv import load_dotenv

from app.errors import ConfigError

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "app/config.runtime.json"


def config_path() -> str:
    return os.getenv("H2SCHED_CONFIG_PATH", DEFAULT_CONFIG_PATH)


class FleetSection(BaseModel):
    # Identical modules; total capacity = n_modules * module_capacity_mw
    n_modules: int = Field(1, ge=1)
    module_capacity_mw: float = Field(100.0, gt=0)
    # Empty lists mean a cold plant (all off, zero power)
    initial_on_state: List[bool] = Field(default_factory=list)
    initial_power_mw: List[float] = Field(default_factory=list)


class ElectrolyzerSection(BaseModel):
    c_min_fraction: float = Field(0.10, gt=0, lt=1)
    ramp_fraction: float = Field(0.15, gt=0)
    startup_energy_fraction: float = Field(0.01, ge=0)
    hydrogen_price_usd_kg: float = Field(2.0, ge=0)


class CurveSection(BaseModel):
    # CSV of (load_fraction, h_norm_kg_per_hour_per_mw); None uses the parametric reference curve
    source: Optional[str] = None
    alpha: float = 22.0
    beta: float = 6.0
    gamma: float = 0.54
    x_min: float = Field(0.10, gt=0, lt=1)
    n_samples: int = Field(1001, ge=3)
    segments: int = Field(88, ge=1)
    fit_mode: Literal["secant", "origin-hull"] = "secant"


class MarketSection(BaseModel):
    # None uses the bundled synthetic week
    path: Optional[str] = None


class SolverSection(BaseModel):
    backend: Literal["branch-and-bound", "highs"] = "branch-and-bound"
    lp_engine: Literal["simplex", "highs", "auto"] = "auto"
    relative_gap: float = Field(1e-6, gt=0)
    integrality_tolerance: float = Field(1e-6, gt=0)
    node_limit: Optional[int] = Field(None, ge=1)
    time_limit: Optional[float] = Field(None, gt=0)
    day_split: bool = False


class OutputSection(BaseModel):
    directory: str = "results"
    format: Literal["csv", "json"] = "csv"


class LoggingSection(BaseModel):
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"


class PlantConfig(BaseModel):
    fleet: FleetSection = FleetSection()
    electrolyzer: ElectrolyzerSection = ElectrolyzerSection()
    curve: CurveSection = CurveSection()
    market: MarketSection = MarketSection()
    solver: SolverSection = SolverSection()
    output: OutputSection = OutputSection()
    logging: LoggingSection = LoggingSection()
    tags: List[str] = Field(default_factory=lambda: ["synthetic-demo"])


def load_config(path: Optional[str] = None) -> PlantConfig:
    """Read the scenario config; a missing file yields defaults, a broken one is an error."""
    path = path or config_path()
    if not os.path.exists(path):
        logger.warning(f"Config file {path} not found; using defaults")
        return PlantConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            return PlantConfig(**json.load(f))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})")
    except ValidationError as e:
        raise ConfigError(f"{path}: invalid config ({e.error_count()} errors): {e.errors()[0]['msg']}")


def save_config(cfg: PlantConfig, path: Optional[str] = None) -> None:
    path = path or config_path()
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(json.loads(cfg.model_dump_json()), f, indent=2)
    except OSError as e:
        raise ConfigError(f"cannot write config to {path}: {e}")


def update_config(patch: Dict[str, Any], path: Optional[str] = None) -> PlantConfig:
    current = load_config(path)
    merged = json.loads(current.model_dump_json())
    # shallow merge per section
    for key, value in patch.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    try:
        new = PlantConfig(**merged)
    except ValidationError as e:
        raise ConfigError(f"invalid config update: {e.errors()[0]['msg']}")
    save_config(new, path)
    return new
