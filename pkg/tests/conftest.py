"""
Pytest configuration and fixtures for the scheduler tests
"""
import json
from typing import Optional, Sequence

import numpy as np
import pytest

from app.curve.production import reference_curve
from app.curve.pwl import fit_concave_pwl
from app.market.records import MarketRecord, MarketSeries
from app.model.fleet import ElectrolyzerSpec, FleetConfig
from app.model.problem import build_problem


def make_market(
    prices: Sequence[float],
    hsl: Sequence[float],
    cleared_power: Optional[Sequence[float]] = None,
    bid: Optional[Sequence[float]] = None,
) -> MarketSeries:
    """Market with cleared prices `prices`; bids default to the cleared price (export = cleared power)."""
    cleared_power = hsl if cleared_power is None else cleared_power
    bid = prices if bid is None else bid
    return MarketSeries(
        records=tuple(
            MarketRecord(
                hour_index=t,
                bid_price=float(bid[t]),
                cleared_price=float(prices[t]),
                hsl=float(hsl[t]),
                cleared_power=float(cleared_power[t]),
            )
            for t in range(len(prices))
        )
    )


def make_problem(market, pwl, n_modules=1, c_max=10.0, on=(), power=(), **spec_fields):
    fleet = FleetConfig(
        n_modules=n_modules,
        spec=ElectrolyzerSpec(c_max=c_max, **spec_fields),
        initial_on_state=tuple(on),
        initial_power=tuple(power),
    )
    return build_problem(market, fleet, pwl)


def random_problem(seed: int, horizon: int, n_modules: int, pwl, price_scale: float = 1.0):
    """Small random instance: a few MW of wind per module, prices around the hydrogen break-even.

    `price_scale` multiplies the electricity prices, the bids and the hydrogen price.
    """
    rng = np.random.default_rng(seed)
    c_max = 10.0
    hsl = rng.uniform(0.0, 1.2 * c_max * n_modules, horizon).round(3)
    cleared = (hsl * rng.uniform(0.0, 1.0, horizon)).round(3)
    prices = rng.uniform(-10.0, 60.0, horizon).round(2)
    bid = prices + rng.choice([-5.0, 5.0], horizon)
    market = make_market(prices * price_scale, hsl, cleared_power=cleared, bid=bid * price_scale)
    on = tuple(bool(v) for v in rng.integers(0, 2, n_modules))
    power = tuple(float(rng.uniform(1.0, 1.5)) if o else 0.0 for o in on)
    hydrogen_price = ElectrolyzerSpec.model_fields["hydrogen_price"].default * price_scale
    spec_fields = {} if price_scale == 1.0 else {"hydrogen_price": hydrogen_price}
    return make_problem(market, pwl, n_modules=n_modules, c_max=c_max, on=on, power=power, **spec_fields)


@pytest.fixture(scope="session")
def curve():
    """Reference production curve on a coarser sample grid."""
    return reference_curve(n_samples=201)


@pytest.fixture(scope="session")
def pwl2(curve):
    return fit_concave_pwl(curve, 2)


@pytest.fixture(scope="session")
def pwl4(curve):
    return fit_concave_pwl(curve, 4)


@pytest.fixture(scope="session")
def pwl8(curve):
    return fit_concave_pwl(curve, 8)


@pytest.fixture(scope="session")
def pwl88(curve):
    return fit_concave_pwl(curve, 88)


@pytest.fixture(scope="function")
def temp_config(tmp_path, monkeypatch):
    """Point the config loader at a scratch file holding a small cold plant."""
    path = tmp_path / "config.json"
    path.write_text(
        json.dumps(
            {
                "fleet": {"n_modules": 2, "module_capacity_mw": 10.0},
                "curve": {"segments": 4, "n_samples": 201},
                "solver": {"backend": "branch-and-bound", "lp_engine": "simplex"},
                "output": {"directory": str(tmp_path / "results"), "format": "csv"},
            }
        ),
        encoding="utf-8",
    )
    monkeypatch.setenv("H2SCHED_CONFIG_PATH", str(path))
    yield path


@pytest.fixture(scope="function")
def small_market_csv(tmp_path):
    """Six hours of market data in the CSV schema."""
    path = tmp_path / "market.csv"
    rows = [
        "hour,bid_price_usd_mwh,cleared_price_usd_mwh,hsl_mw,lsl_mw,cleared_power_mw",
        "0,20,25,4,0,4",
        "1,20,25,12,0,10",
        "2,30,22,15,0,12",
        "3,20,18,20,0,15",
        "4,20,-5,18,0,10",
        "5,20,40,6,0,6",
    ]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path
