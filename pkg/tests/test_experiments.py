import numpy as np
import pytest

from app.config import PlantConfig, load_config
from app.errors import ProblemError
from app.experiments.compare import compare_configurations, hour_detail, percent_increase
from app.experiments.scenario import SegmentChoice, market_digest, run_scenario, run_sweep, variant
from app.solver.branch_and_bound import MipStatus
from conftest import make_market

PRICES = [25.0, 25.0, 22.0, 18.0, -5.0, 40.0]
WIND = [4.0, 12.0, 15.0, 20.0, 18.0, 6.0]


def _small_plant(**solver) -> PlantConfig:
    return PlantConfig(
        fleet={"n_modules": 2, "module_capacity_mw": 10.0},
        curve={"segments": 4, "n_samples": 201},
        solver={"backend": "branch-and-bound", "lp_engine": "simplex", **solver},
    )


@pytest.fixture(scope="module")
def market():
    return make_market(PRICES, WIND, cleared_power=[4.0, 10.0, 12.0, 15.0, 10.0, 6.0])


@pytest.fixture(scope="module")
def pair(market):
    plant = _small_plant()
    return [run_scenario(variant(plant, m, total_capacity=20.0), market) for m in (1, 2)]


class TestPercentIncrease:
    def test_reported_increases(self):
        assert percent_increase(407.20, 378.80) == pytest.approx(7.50, abs=5e-3)
        assert percent_increase(7724.45, 7408.77) == pytest.approx(4.26, abs=5e-3)

    def test_identical_values(self):
        assert percent_increase(12.5, 12.5) == 0.0

    def test_zero_baseline(self):
        assert percent_increase(0.0, 0.0) == 0.0
        assert percent_increase(3.0, 0.0) == float("inf")


class TestVariant:
    def test_fixed_total_capacity(self):
        cfg = variant(_small_plant(), 4, segments=8, total_capacity=100.0, c_min_fraction=0.2)
        assert cfg.fleet.n_modules == 4
        assert cfg.fleet.module_capacity_mw == pytest.approx(25.0)
        assert cfg.curve.segments == 8
        assert cfg.electrolyzer.c_min_fraction == 0.2

    def test_keeps_current_total(self):
        cfg = variant(_small_plant(), 5)
        assert cfg.fleet.module_capacity_mw == pytest.approx(4.0)


class TestRunScenario:
    """End to end on a six-hour market."""

    def test_from_config_file(self, temp_config, small_market_csv):
        result = run_scenario(load_config(), small_market_csv)
        assert result.label == "2x10MW_4seg"
        assert result.horizon == 6
        assert result.solve.status == MipStatus.OPTIMAL
        assert result.fleet_min_power_mw == pytest.approx(2.0)
        assert len(result.hourly.module_power_mw) == 6

    def test_revenue_decomposition(self, pair):
        for r in pair:
            assert r.total_revenue_usd == pytest.approx(r.grid_revenue_usd + r.hydrogen_revenue_usd, abs=1e-6)
            assert r.solve.max_violation <= 1e-6
            assert r.solve.gap <= 1e-6

    def test_more_modules_never_worse(self, pair):
        single, double = pair
        assert double.total_revenue_usd >= single.total_revenue_usd - 1e-6

    def test_zero_wind(self):
        series = make_market([20.0] * 4, [0.0] * 4)
        result = run_scenario(_small_plant(), series)
        assert result.total_power_mwh == 0.0
        assert result.total_hydrogen_kg == 0.0
        assert result.total_revenue_usd == 0.0
        assert result.operating_hours == 0
        assert result.peak_proximity == 0.0

    def test_day_split_never_beats_full_horizon(self):
        hours = 30
        t = np.arange(hours)
        series = make_market(
            (30.0 + 25.0 * np.sin(t / 4.0)).round(2),
            (12.0 + 8.0 * np.cos(t / 5.0)).round(2),
            cleared_power=(6.0 + 4.0 * np.cos(t / 5.0)).round(2),
        )
        full = run_scenario(_small_plant(backend="highs"), series)
        split = run_scenario(_small_plant(backend="highs", day_split=True), series)
        assert split.solve.day_split
        assert split.horizon == hours
        assert split.total_revenue_usd <= full.total_revenue_usd + 1e-6

    def test_day_split_survives_wind_drop_at_midnight(self):
        # one 100 MW module at full load on day one cannot ramp below 85 MW in hour 24
        hours = 28
        wind = [117.0] * 24 + [42.6] * (hours - 24)
        series = make_market([5.0] * hours, wind, cleared_power=wind)
        plant = variant(_small_plant(backend="highs", day_split=True), 1, total_capacity=100.0)
        result = run_scenario(plant, series)
        power = result.hourly.total_power_mw
        assert result.solve.max_violation <= 1e-6
        assert max(power[:20]) == pytest.approx(100.0)
        assert power[23] <= 15.0 + 42.6 + 1e-6
        assert power[24] == pytest.approx(42.6, abs=1e-6)

    def test_market_digest_is_stable(self, market):
        assert market_digest(market) == market_digest(make_market(PRICES, WIND, [4.0, 10.0, 12.0, 15.0, 10.0, 6.0]))
        assert market_digest(market) != market_digest(make_market(PRICES, WIND))


class TestCompare:
    def test_table(self, pair):
        table = compare_configurations(list(reversed(pair)))
        assert table.baseline == pair[0].label
        assert [r.n_modules for r in table.rows] == [1, 2]
        assert table.rows[0].revenue_increase_pct == 0.0

    def test_mixed_capacity_rejected(self, pair, market):
        other = run_scenario(variant(_small_plant(), 2, total_capacity=30.0), market)
        with pytest.raises(ProblemError, match="total capacity"):
            compare_configurations([pair[0], other])

    def test_mixed_market_rejected(self, pair):
        other = run_scenario(variant(_small_plant(), 2, total_capacity=20.0), make_market(PRICES, WIND))
        with pytest.raises(ProblemError, match="different market data"):
            compare_configurations([pair[0], other])

    def test_nothing_to_compare(self):
        with pytest.raises(ProblemError):
            compare_configurations([])


class TestHourDetail:
    def test_profit_decompositions(self, pair):
        table = hour_detail(pair, 3)
        assert len(table.rows) == 2
        for row in table.rows:
            assert row.hydrogen_profit_usd == pytest.approx(2.0 * row.hydrogen_kg)
            assert row.total_profit_usd == pytest.approx(row.hydrogen_profit_usd + 18.0 * row.grid_sale_mw)

    def test_hour_out_of_range(self, pair):
        with pytest.raises(ProblemError, match="outside horizon"):
            hour_detail(pair, 6)


MODULES = [1, 2, 4, 10]
# per-run HiGHS limits on the 168-hour week; runs with two or more modules
# usually stop at the time limit with a fraction of a percent still open
DEMO_TIME_LIMIT = 60.0
DEMO_GAP = 1e-4
CLOSED = (MipStatus.OPTIMAL, MipStatus.GAP_REACHED)


def _demo_plant(day_split: bool = False) -> PlantConfig:
    return PlantConfig(
        fleet={"n_modules": 1, "module_capacity_mw": 100.0},
        solver={
            "backend": "highs",
            "lp_engine": "highs",
            "relative_gap": DEMO_GAP,
            "time_limit": DEMO_TIME_LIMIT,
            "day_split": day_split,
        },
    )


def _closed(result) -> bool:
    return result.solve.status in CLOSED


def _equal_power_spread(results):
    """Relative hydrogen spread at the producing hours where every run draws the same power."""
    power = np.array([r.hourly.total_power_mw for r in results])
    hydrogen = np.array([r.hourly.total_hydrogen_kg for r in results])
    equal = np.all(np.abs(power - power[0]) <= 1e-6, axis=0) & (power[0] > 0)
    top = hydrogen[:, equal].max(axis=0)
    return (top - hydrogen[:, equal].min(axis=0)) / top


@pytest.mark.slow
class TestDemoWeek:
    """Full synthetic week at 100 MW total capacity."""

    @pytest.fixture(scope="class")
    def sweep88(self):
        return run_sweep(_demo_plant(), MODULES, [88])[88]

    @pytest.fixture(scope="class")
    def sweep8(self):
        return run_sweep(_demo_plant(), MODULES, [8])[8]

    @pytest.fixture(scope="class")
    def hull8(self):
        return run_sweep(_demo_plant(), MODULES, [SegmentChoice(8, "origin-hull")])[8]

    @pytest.mark.parametrize("sweep", ["sweep8", "sweep88"])
    def test_single_module_closes_its_gap(self, request, sweep):
        one = request.getfixturevalue(sweep)[0]
        assert _closed(one)
        assert one.solve.max_violation <= 1e-6

    @pytest.mark.parametrize("sweep", ["sweep8", "sweep88"])
    def test_splitting_never_loses_revenue(self, request, sweep):
        results = request.getfixturevalue(sweep)
        one = results[0]
        for cur in results[1:]:
            # the bound always covers the single-module optimum; the incumbent only once the gap is closed
            assert cur.solve.best_bound >= one.total_revenue_usd * (1.0 - DEMO_GAP)
            if _closed(cur):
                assert cur.total_revenue_usd >= one.total_revenue_usd * (1.0 - 2 * DEMO_GAP)

    def test_strictly_increasing_in_module_count(self, sweep88):
        undecided = []
        for prev, cur in zip(sweep88, sweep88[1:]):
            proven = percent_increase(cur.total_revenue_usd, prev.solve.best_bound)
            possible = percent_increase(cur.solve.best_bound, prev.total_revenue_usd)
            assert possible > 0.05, f"{cur.label} cannot gain 0.05% over {prev.label}"
            if proven <= 0.05:
                undecided.append(f"{prev.n_modules}->{cur.n_modules}")
                continue
            if _closed(prev) and _closed(cur):
                assert percent_increase(cur.total_hydrogen_kg, prev.total_hydrogen_kg) > 0.05
        if undecided:
            pytest.skip(f"revenue increase not decided within {DEMO_TIME_LIMIT:g}s for {', '.join(undecided)}")

    def test_comparison_table(self, sweep88):
        table = compare_configurations(sweep88)
        assert [r.n_modules for r in table.rows] == MODULES
        assert table.rows[0].revenue_increase_pct == 0.0
        for row, result in zip(table.rows[1:], sweep88[1:]):
            expected = percent_increase(result.total_revenue_usd, sweep88[0].total_revenue_usd)
            assert row.revenue_increase_pct == pytest.approx(expected)

    def test_fine_fit_separates_equal_power_hours(self, sweep88):
        spread = _equal_power_spread(sweep88)
        assert spread.size
        assert spread.max() > 0.005

    def test_coarse_hull_hours_agree(self, hull8):
        spread = _equal_power_spread(hull8)
        assert spread.size
        assert np.all(spread <= 0.005)

    def test_day_split_week(self, sweep8):
        split = run_scenario(variant(_demo_plant(day_split=True), 1, segments=8))
        availability = split.hourly.availability_mw
        assert split.solve.day_split
        assert split.horizon == 168
        assert split.solve.max_violation <= 1e-6
        for end in range(23, 167, 24):
            assert split.hourly.total_power_mw[end] <= 15.0 + availability[end + 1] + 1e-6
        full = sweep8[0]
        if _closed(full):
            assert split.total_revenue_usd <= full.solve.best_bound + 1e-6
