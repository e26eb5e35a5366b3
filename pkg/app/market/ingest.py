"""
Market CSV ingestion.

Schema (UTF-8, one row per hour):
    hour,bid_price_usd_mwh,cleared_price_usd_mwh,hsl_mw,lsl_mw,cleared_power_mw

Row numbers in errors count data rows from 1 (the header is not a row).
"""
import logging
from pathlib import Path
from typing import Any, Dict, List, TextIO, Union

import pandas as pd
from pydantic import ValidationError

from app.errors import MarketDataError
from app.market.records import MarketRecord, MarketSeries

logger = logging.getLogger(__name__)

MARKET_COLUMNS: Dict[str, str] = {
    "hour": "hour_index",
    "bid_price_usd_mwh": "bid_price",
    "cleared_price_usd_mwh": "cleared_price",
    "hsl_mw": "hsl",
    "lsl_mw": "lsl",
    "cleared_power_mw": "cleared_power",
}

DEMO_MARKET_PATH = Path(__file__).resolve().parent.parent / "data" / "demo_week.csv"


def _first_error(e: ValidationError) -> str:
    err = e.errors()[0]
    where = ".".join(str(part) for part in err.get("loc", ()))
    return f"{where}: {err['msg']}" if where else err["msg"]


def parse_market_csv(source: Union[str, Path, TextIO]) -> MarketSeries:
    """Parse and validate a market file into an hour-contiguous MarketSeries."""
    try:
        frame = pd.read_csv(source, dtype=str, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise MarketDataError("market file is empty")
    except pd.errors.ParserError as e:
        raise MarketDataError(f"unreadable market file: {e}")

    missing = [c for c in MARKET_COLUMNS if c not in frame.columns]
    if missing:
        raise MarketDataError(f"missing columns: {', '.join(missing)}")
    if frame.empty:
        raise MarketDataError("market file has no data rows")

    raw = frame[list(MARKET_COLUMNS)]
    numeric = raw.apply(pd.to_numeric, errors="coerce")

    records: List[MarketRecord] = []
    seen: Dict[int, int] = {}
    for position in range(1, len(frame) + 1):
        row = numeric.iloc[position - 1]
        for column in MARKET_COLUMNS:
            if pd.isna(row[column]):
                text = raw.iloc[position - 1][column]
                raise MarketDataError(f"column '{column}' value {text!r} does not parse as a number", row=position)
        values: Dict[str, Any] = {MARKET_COLUMNS[c]: float(row[c]) for c in MARKET_COLUMNS}

        hour = values["hour_index"]
        if hour != int(hour):
            raise MarketDataError(f"hour {hour} is not an integer", row=position)
        values["hour_index"] = int(hour)
        if values["hour_index"] in seen:
            raise MarketDataError(
                f"duplicate hour {values['hour_index']} (first at row {seen[values['hour_index']]})", row=position
            )
        seen[values["hour_index"]] = position

        try:
            records.append(MarketRecord(**values))
        except ValidationError as e:
            raise MarketDataError(_first_error(e), row=position)

    records.sort(key=lambda r: r.hour_index)
    for expected, record in enumerate(records):
        if record.hour_index != expected:
            raise MarketDataError(f"missing hour {expected}")

    series = MarketSeries(records=tuple(records))
    logger.info(f"Parsed market data: {series.horizon} hours")
    return series


def load_demo_market() -> MarketSeries:
    """The bundled synthetic one-week market (labelled synthetic, not real records)."""
    return parse_market_csv(DEMO_MARKET_PATH)


def write_market_csv(series: MarketSeries, path: Union[str, Path]) -> Path:
    """Write a series in the schema `parse_market_csv` reads."""
    out = Path(path)
    inverse = {v: k for k, v in MARKET_COLUMNS.items()}
    frame = pd.DataFrame(series.to_rows()).rename(columns=inverse)[list(MARKET_COLUMNS)]
    frame.to_csv(out, index=False)
    return out
