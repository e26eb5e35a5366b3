"""
Electrolyzer module and fleet parameters.
"""
from typing import Any, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.errors import ProblemError


class ElectrolyzerSpec(BaseModel):
    """Technical and economic parameters of one electrolyzer module."""

    model_config = ConfigDict(frozen=True)

    c_max: float = Field(..., gt=0, description="Module capacity, MW")
    c_min_fraction: float = Field(0.10, gt=0, lt=1, description="Minimum operating load as a fraction of c_max")
    ramp_fraction: float = Field(0.15, gt=0, description="Hourly ramp limit as a fraction of c_max")
    startup_energy_fraction: float = Field(0.01, ge=0, description="Startup energy as a fraction of c_max, MWh")
    hydrogen_price: float = Field(2.0, ge=0, description="USD/kg")

    @property
    def c_min(self) -> float:
        return self.c_min_fraction * self.c_max

    @property
    def ramp_limit(self) -> float:
        return self.ramp_fraction * self.c_max

    @property
    def startup_energy(self) -> float:
        return self.startup_energy_fraction * self.c_max


class FleetConfig(BaseModel):
    """M identical modules and their state in the hour before the horizon."""

    model_config = ConfigDict(frozen=True)

    n_modules: int = Field(..., ge=1)
    spec: ElectrolyzerSpec
    initial_on_state: Tuple[bool, ...] = ()
    initial_power: Tuple[float, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _default_initial_state(cls, data: Any) -> Any:
        if isinstance(data, dict):
            n = data.get("n_modules")
            if isinstance(n, int) and n >= 1:
                data = dict(data)
                if not data.get("initial_on_state"):
                    data["initial_on_state"] = (False,) * n
                if not data.get("initial_power"):
                    data["initial_power"] = (0.0,) * n
        return data

    @model_validator(mode="after")
    def _check_initial_state(self) -> "FleetConfig":
        if len(self.initial_on_state) != self.n_modules or len(self.initial_power) != self.n_modules:
            raise ValueError(f"initial state must list {self.n_modules} modules")
        for m, (on, power) in enumerate(zip(self.initial_on_state, self.initial_power)):
            if not 0.0 <= power <= self.spec.c_max:
                raise ValueError(f"initial power of module {m} outside [0, {self.spec.c_max}]")
            if power > 0 and not on:
                raise ValueError(f"module {m} has initial power but is off")
        return self

    @property
    def total_capacity(self) -> float:
        return self.n_modules * self.spec.c_max

    def with_initial_state(self, on: Tuple[bool, ...], power: Tuple[float, ...]) -> "FleetConfig":
        return FleetConfig(
            n_modules=self.n_modules,
            spec=self.spec,
            initial_on_state=tuple(bool(v) for v in on),
            initial_power=tuple(float(v) for v in power),
        )


def homogeneous_fleet(n_modules: int, total_capacity: float, **spec_fields: Any) -> FleetConfig:
    """Split total_capacity evenly over n_modules identical modules."""
    if n_modules < 1:
        raise ProblemError(f"fleet needs at least one module, got {n_modules}")
    return FleetConfig(
        n_modules=n_modules,
        spec=ElectrolyzerSpec(c_max=total_capacity / n_modules, **spec_fields),
    )
