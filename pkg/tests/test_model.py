import numpy as np
import pytest
from pydantic import ValidationError

from app.curve.production import reference_curve
from app.curve.pwl import fit_concave_pwl
from app.errors import ProblemError
from app.market.ingest import load_demo_market
from app.model.fleet import ElectrolyzerSpec, FleetConfig, homogeneous_fleet
from app.model.milp import VariableIndex, build_milp, expected_family_counts, write_lp_file
from app.model.problem import build_problem, handoff_power_cap, split_by_day
from app.solver.lp import solve_lp
from app.solver.simplex import LpStatus
from conftest import make_market, make_problem


class TestFleet:
    """Module and fleet parameters."""

    def test_derived_limits(self):
        spec = ElectrolyzerSpec(c_max=25.0)
        assert spec.c_min == pytest.approx(2.5)
        assert spec.ramp_limit == pytest.approx(3.75)
        assert spec.startup_energy == pytest.approx(0.25)
        assert spec.hydrogen_price == 2.0

    def test_zero_capacity_rejected(self):
        with pytest.raises(ValidationError):
            ElectrolyzerSpec(c_max=0)

    def test_homogeneous_split(self):
        fleet = homogeneous_fleet(4, 100.0)
        assert fleet.spec.c_max == pytest.approx(25.0)
        assert fleet.total_capacity == pytest.approx(100.0)
        assert fleet.initial_on_state == (False,) * 4
        assert fleet.initial_power == (0.0,) * 4

    def test_homogeneous_needs_a_module(self):
        with pytest.raises(ProblemError):
            homogeneous_fleet(0, 100.0)

    def test_initial_power_while_off_rejected(self):
        with pytest.raises(ValidationError, match="initial power but is off"):
            FleetConfig(n_modules=1, spec=ElectrolyzerSpec(c_max=10), initial_on_state=(False,), initial_power=(2.0,))

    def test_initial_state_length_checked(self):
        with pytest.raises(ValidationError, match="2 modules"):
            FleetConfig(n_modules=2, spec=ElectrolyzerSpec(c_max=10), initial_on_state=(True,), initial_power=(2.0,))

    def test_with_initial_state(self):
        fleet = homogeneous_fleet(2, 20.0).with_initial_state((True, False), (3.0, 0.0))
        assert fleet.initial_on_state == (True, False)
        assert fleet.initial_power == (3.0, 0.0)


class TestBuildProblem:
    """Problem assembly."""

    def test_demo_week_four_modules(self):
        pwl = fit_concave_pwl(reference_curve(), 88)
        problem = build_problem(load_demo_market(), homogeneous_fleet(4, 100.0), pwl)
        assert problem.horizon == 168
        assert problem.n_modules == 4
        assert np.all(problem.export_limits <= problem.availabilities)

    def test_single_hour_single_module(self, pwl2):
        problem = make_problem(make_market([30.0], [5.0]), pwl2)
        assert (problem.horizon, problem.n_modules) == (1, 1)

    def test_min_load_below_fitted_range(self, pwl2):
        with pytest.raises(ProblemError, match="below the fitted range"):
            make_problem(make_market([30.0], [5.0]), pwl2, c_min_fraction=0.05)

    def test_derived_arrays_are_read_only(self, pwl2):
        problem = make_problem(make_market([30.0, 10.0], [5.0, 6.0]), pwl2)
        with pytest.raises(ValueError):
            problem.prices[0] = 1.0

    def test_split_by_day(self, pwl2):
        market = make_market([20.0] * 30, [5.0] * 30)
        windows = split_by_day(make_problem(market, pwl2))
        assert [w.horizon for w in windows] == [24, 6]

    def test_split_windows_cap_the_handoff_hour(self, pwl2):
        # hour 24 has 5 MW of wind: the module must leave day one at or below ramp + 5 MW
        market = make_market([20.0] * 30, [5.0] * 30)
        first, last = split_by_day(make_problem(market, pwl2))
        assert first.terminal_power_cap == pytest.approx(1.5 + 5.0)
        assert last.terminal_power_cap is None
        assert first.with_initial_state([True], [2.0]).terminal_power_cap == first.terminal_power_cap

    @pytest.mark.parametrize(
        "n_modules, availability, expected",
        [(1, 5.0, 6.5), (1, 100.0, 10.0), (4, 20.0, 6.5), (2, 1.0, 1.5), (3, 0.0, 1.5)],
    )
    def test_handoff_power_cap(self, n_modules, availability, expected):
        spec = ElectrolyzerSpec(c_max=10.0)
        assert handoff_power_cap(spec, n_modules, availability) == pytest.approx(expected)

    def test_negative_terminal_cap_rejected(self, pwl2):
        problem = make_problem(make_market([20.0], [5.0]), pwl2)
        with pytest.raises(ProblemError, match="terminal power cap"):
            build_problem(problem.market, problem.fleet, pwl2, terminal_power_cap=-1.0)

    def test_with_initial_state(self, pwl2):
        problem = make_problem(make_market([20.0] * 2, [5.0] * 2), pwl2)
        warm = problem.with_initial_state([True], [1.2])
        assert warm.fleet.initial_on_state == (True,)
        assert warm.fleet.initial_power == (1.2,)


class TestVariableIndex:
    """Column layout."""

    def test_block_layout(self):
        idx = VariableIndex(3, 2)
        assert idx.n_variables == 5 * 6 + 3
        assert idx.h(0, 0) == 0
        assert idx.p_e(0, 0) == 6
        assert idx.z_on(1, 1) == 3 * 6 + 1 * 2 + 1
        assert idx.p_grid(2) == 32

    def test_names(self):
        names = VariableIndex(2, 1).names()
        assert names[0] == "h_0_0"
        assert names[-1] == "p_grid_1"
        assert len(names) == 12


class TestBuildMilp:
    """MILP rows, bounds and objective."""

    def test_family_counts_two_hours_one_module(self, pwl2):
        problem = make_problem(make_market([20.0, 30.0], [5.0, 6.0]), pwl2)
        instance = build_milp(problem)
        counts = instance.family_counts()
        assert counts == expected_family_counts(2, 1, 2)
        assert counts["hydrogen_curve"] == 4
        assert counts["operating_range"] == 4
        assert counts["export_limit"] == 2
        assert counts["ramp_up"] + counts["ramp_down"] == 4
        assert sum(counts[f"startup_logic_{k}"] for k in "abc") == 6
        assert counts["startup_cost"] == 2
        assert counts["power_balance"] == 2
        assert instance.n_rows == sum(counts.values())

    def test_objective_and_integrality(self, pwl2):
        problem = make_problem(make_market([20.0, -3.0], [5.0, 6.0]), pwl2, hydrogen_price=2.5)
        instance = build_milp(problem)
        idx = instance.index
        assert instance.objective[idx.h(1, 0)] == 2.5
        assert instance.objective[idx.p_grid(1)] == -3.0
        assert instance.objective[idx.p_e(0, 0)] == 0.0
        binaries = {idx.z_on(0, 0), idx.z_on(1, 0), idx.z_su(0, 0), idx.z_su(1, 0)}
        assert set(np.nonzero(instance.integrality)[0]) == binaries
        np.testing.assert_array_equal(instance.branch_candidates, [idx.z_on(0, 0), idx.z_on(1, 0)])

    def test_module_off_produces_nothing(self, pwl2):
        problem = make_problem(make_market([0.0, 0.0], [20.0, 20.0]), pwl2)
        instance = build_milp(problem)
        idx = instance.index
        upper = instance.upper.copy()
        upper[idx.block("z_on")] = 0.0
        lp = solve_lp(instance, upper=upper)
        assert lp.status == LpStatus.OPTIMAL
        for block in ("h", "p_e", "p_su"):
            np.testing.assert_allclose(lp.x[idx.block(block)], 0.0, atol=1e-9)

    def test_switching_on_forces_startup(self, pwl2):
        problem = make_problem(make_market([0.0, 0.0], [20.0, 20.0]), pwl2)
        instance = build_milp(problem)
        idx = instance.index
        lower, upper = instance.lower.copy(), instance.upper.copy()
        lower[idx.z_on(0, 0)] = upper[idx.z_on(0, 0)] = 0.0
        lower[idx.z_on(1, 0)] = upper[idx.z_on(1, 0)] = 1.0
        lp = solve_lp(instance, lower, upper)
        assert lp.status == LpStatus.OPTIMAL
        assert lp.x[idx.z_su(1, 0)] == pytest.approx(1.0)
        assert lp.x[idx.p_su(1, 0)] == pytest.approx(problem.spec.startup_energy)
        assert lp.x[idx.h(1, 0)] == pytest.approx(0.0, abs=1e-9)

    def test_initial_power_enters_ramp_rows(self, pwl2):
        problem = make_problem(make_market([0.0], [20.0]), pwl2, on=(True,), power=(4.0,))
        instance = build_milp(problem)
        row = instance.family_rows("ramp_down").start
        assert instance.row_upper[row] == pytest.approx(problem.spec.ramp_limit - 4.0)

    def test_terminal_cap_bounds_last_hour_only(self, pwl2):
        problem = make_problem(make_market([20.0] * 3, [30.0] * 3), pwl2, n_modules=2)
        capped = build_problem(problem.market, problem.fleet, pwl2, terminal_power_cap=4.0)
        instance = build_milp(capped)
        idx = instance.index
        for m in range(2):
            assert instance.upper[idx.p_e(2, m)] == pytest.approx(4.0)
            assert instance.upper[idx.p_e(1, m)] == pytest.approx(10.0)
        assert build_milp(problem).upper[idx.p_e(2, 0)] == pytest.approx(10.0)

    def test_lp_dump(self, tmp_path, pwl2):
        instance = build_milp(make_problem(make_market([20.0, 30.0], [5.0, 6.0]), pwl2))
        text = write_lp_file(instance, tmp_path / "model.lp").read_text()
        for token in ("Maximize", "Subject To", "hydrogen_curve_0:", "startup_cost_1:", "Bounds", "Binaries", "End"):
            assert token in text
        assert "z_on_1_0" in text.split("Binaries")[1]
