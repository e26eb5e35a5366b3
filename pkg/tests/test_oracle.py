import pytest

from app.errors import OracleSizeError
from app.model.milp import build_milp
from app.solver.branch_and_bound import MipOptions, MipStatus, solve_milp
from app.solver.oracle import MAX_ENUMERATED_BINARIES, enumerate_oracle
from conftest import make_market, make_problem, random_problem


class TestEnumerateOracle:
    """Exhaustive on/off enumeration."""

    def test_single_hour_single_module(self, pwl2):
        # a cold module needs its only hour for the startup, so everything is sold
        problem = make_problem(make_market([30.0], [5.0]), pwl2)
        result = enumerate_oracle(problem)
        assert result.node_count == 2
        assert result.status == MipStatus.OPTIMAL
        assert result.objective == pytest.approx(150.0)
        assert result.backend == "oracle"

    def test_leaf_count(self, pwl2):
        problem = make_problem(make_market([10.0, 20.0], [5.0, 5.0]), pwl2, n_modules=2)
        assert enumerate_oracle(problem).node_count == 16

    def test_size_limit(self, pwl2):
        hours = MAX_ENUMERATED_BINARIES + 1
        problem = make_problem(make_market([10.0] * hours, [5.0] * hours), pwl2)
        with pytest.raises(OracleSizeError, match="exceed the enumeration limit"):
            enumerate_oracle(problem)

    def test_engines_agree(self, pwl4):
        problem = random_problem(11, 3, 2, pwl4)
        simplex = enumerate_oracle(problem, engine="simplex")
        highs = enumerate_oracle(problem, engine="highs")
        assert simplex.objective == pytest.approx(highs.objective, rel=1e-6, abs=1e-6)


GRID = [(horizon, n_modules) for horizon in (2, 3, 4) for n_modules in (1, 2, 3)]


def _check_against_oracle(pwl, seed, horizon, n_modules):
    problem = random_problem(seed, horizon, n_modules, pwl)
    oracle = enumerate_oracle(problem, engine="highs")
    result = solve_milp(build_milp(problem), MipOptions(lp_engine="simplex"))
    assert result.audit.passed
    assert result.objective == pytest.approx(oracle.objective, rel=1e-6, abs=1e-6)


class TestRandomizedAgreement:
    """Branch-and-bound equals enumeration on random small instances."""

    @pytest.mark.parametrize("seed", range(10))
    def test_quick(self, pwl4, seed):
        _check_against_oracle(pwl4, seed, 3, 2)

    @pytest.mark.parametrize("fit", ["pwl8", "pwl88"])
    @pytest.mark.parametrize("seed", range(3))
    def test_quick_production_fits(self, request, fit, seed):
        _check_against_oracle(request.getfixturevalue(fit), 500 + seed, 3, 2)

    # instances on which an earlier simplex returned a wrong optimum
    @pytest.mark.parametrize("seed, horizon, n_modules", [(1025, 3, 2), (1048, 4, 1)])
    def test_former_mismatches(self, pwl4, seed, horizon, n_modules):
        _check_against_oracle(pwl4, seed, horizon, n_modules)

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(100))
    def test_hundred_instances(self, pwl4, seed):
        horizon, n_modules = GRID[seed % len(GRID)]
        _check_against_oracle(pwl4, 1000 + seed, horizon, n_modules)

    @pytest.mark.slow
    @pytest.mark.parametrize("fit", ["pwl8", "pwl88"])
    @pytest.mark.parametrize("seed", range(100))
    def test_hundred_instances_production_fits(self, request, fit, seed):
        horizon, n_modules = GRID[seed % len(GRID)]
        _check_against_oracle(request.getfixturevalue(fit), 2000 + seed, horizon, n_modules)
