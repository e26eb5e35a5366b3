"""
Day-ahead market records of the wind plant and the per-hour limits derived from them.
"""
import math
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class MarketRecord(BaseModel):
    """One hour of day-ahead market data."""

    model_config = ConfigDict(frozen=True)

    hour_index: int = Field(..., ge=0, description="0-based hour")
    bid_price: float = Field(..., description="USD/MWh")
    cleared_price: float = Field(..., description="Cleared nodal price, USD/MWh")
    hsl: float = Field(..., ge=0, description="High sustainable limit, MW")
    lsl: float = Field(0.0, ge=0, description="Low sustainable limit, MW")
    cleared_power: float = Field(..., ge=0, description="Cleared power, MW")

    @field_validator("bid_price", "cleared_price")
    @classmethod
    def _finite_price(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("price must be finite")
        return v

    @model_validator(mode="after")
    def _limits(self) -> "MarketRecord":
        if self.lsl > self.hsl:
            raise ValueError(f"lsl {self.lsl} exceeds hsl {self.hsl}")
        if self.cleared_power > self.hsl:
            raise ValueError(f"cleared_power {self.cleared_power} exceeds hsl {self.hsl}")
        return self


def availability(record: MarketRecord) -> float:
    """Maximum wind power of the hour (P^A), taken as the HSL."""
    return record.hsl


def export_limit(record: MarketRecord) -> float:
    """Maximum power sellable to the grid in the hour (P^max).

    An out-of-the-money bid (bid above the cleared price) leaves the whole
    availability free; otherwise only the cleared quantity may be exported.
    """
    if record.bid_price > record.cleared_price:
        return availability(record)
    return record.cleared_power


class MarketSeries(BaseModel):
    """Hour-contiguous market records starting at hour 0."""

    model_config = ConfigDict(frozen=True)

    records: Tuple[MarketRecord, ...] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _contiguous(self) -> "MarketSeries":
        for position, record in enumerate(self.records):
            if record.hour_index != position:
                raise ValueError(f"hour {record.hour_index} at position {position}; expected hour {position}")
        return self

    @property
    def horizon(self) -> int:
        return len(self.records)

    @property
    def cleared_prices(self) -> np.ndarray:
        return np.array([r.cleared_price for r in self.records])

    @property
    def export_limits(self) -> np.ndarray:
        return np.array([export_limit(r) for r in self.records])

    @property
    def availabilities(self) -> np.ndarray:
        return np.array([availability(r) for r in self.records])

    def window(self, start: int, stop: int) -> "MarketSeries":
        """Sub-series of hours [start, stop), re-indexed from 0."""
        if not 0 <= start < stop <= self.horizon:
            raise ValueError(f"window [{start}, {stop}) outside horizon {self.horizon}")
        return MarketSeries(
            records=tuple(
                r.model_copy(update={"hour_index": r.hour_index - start}) for r in self.records[start:stop]
            )
        )

    def to_rows(self) -> List[dict]:
        return [r.model_dump() for r in self.records]
