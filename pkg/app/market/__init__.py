# Day-ahead market data ingestion
from app.market.ingest import (
    DEMO_MARKET_PATH,
    MARKET_COLUMNS,
    load_demo_market,
    parse_market_csv,
    write_market_csv,
)
from app.market.records import MarketRecord, MarketSeries, availability, export_limit

__all__ = [
    "DEMO_MARKET_PATH",
    "MARKET_COLUMNS",
    "MarketRecord",
    "MarketSeries",
    "availability",
    "export_limit",
    "load_demo_market",
    "parse_market_csv",
    "write_market_csv",
]
