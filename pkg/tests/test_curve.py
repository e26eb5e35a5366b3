import io

import numpy as np
import pandas as pd
import pytest

from app.curve.production import (
    CURVE_COLUMNS,
    ProductionCurve,
    curve_summary,
    load_curve_points,
    reference_curve,
    write_curve_points,
)
from app.curve.pwl import (
    PwlCurve,
    PwlSegment,
    approximation_error,
    efficiency,
    eval_pwl,
    fit_concave_pwl,
    peak_efficiency,
)
from app.errors import CurveValidationError, MarketDataError
from app.market.ingest import MARKET_COLUMNS, parse_market_csv


def _write_points(path, xs, hs):
    pd.DataFrame({CURVE_COLUMNS[0]: xs, CURVE_COLUMNS[1]: hs}).to_csv(path, index=False)
    return path


class TestReferenceCurve:
    """Parametric reference curve."""

    def test_sample_values(self):
        curve = reference_curve()
        assert curve.value(0.10) == pytest.approx(1.6)
        assert curve.value(1.0) == pytest.approx(15.46)
        assert curve.value(0.30) == pytest.approx(5.52, abs=1e-4)

    def test_efficiency_peaks_inside_range(self):
        curve = reference_curve()
        assert curve.peak_load_fraction == pytest.approx(0.30, abs=1e-3)
        assert curve.specific_production(0.30) == pytest.approx(18.40, abs=1e-3)
        assert curve.specific_production(1.0) == pytest.approx(15.46)

        grid = np.linspace(0.30, 1.0, 500)
        assert np.all(np.diff(curve.specific_production(grid)) < 0)

    def test_provenance_and_parameters(self):
        curve = reference_curve()
        assert curve.provenance == "reference-parametric"
        assert curve.parameters["alpha"] == 22.0

    def test_peak_outside_range_rejected(self):
        with pytest.raises(CurveValidationError, match="peak"):
            reference_curve(gamma=8.0)

    def test_no_extrapolation(self):
        curve = reference_curve()
        with pytest.raises(CurveValidationError):
            curve.value(0.05)

    def test_summary(self):
        summary = curve_summary(reference_curve())
        assert summary["x_min"] == pytest.approx(0.10)
        assert summary["peak_specific_production"] > summary["full_load_specific_production"]


class TestLoadCurvePoints:
    """Curve CSV ingestion."""

    def test_hundred_rows(self, tmp_path):
        xs = np.linspace(0.1, 1.0, 100)
        path = _write_points(tmp_path / "curve.csv", xs, 22 * xs - 6 * xs**2 - 0.54)
        curve = load_curve_points(path)
        assert curve.n_samples == 100
        assert curve.provenance == "user-file"

    def test_too_few_samples(self, tmp_path):
        path = _write_points(tmp_path / "curve.csv", [0.1, 1.0], [1.0, 9.0])
        with pytest.raises(CurveValidationError, match="too few samples"):
            load_curve_points(path)

    def test_convex_kink_names_sample(self, tmp_path):
        path = _write_points(tmp_path / "curve.csv", [0.1, 0.5, 0.6, 1.0], [1.0, 5.0, 6.5, 9.0])
        with pytest.raises(CurveValidationError) as exc:
            load_curve_points(path)
        assert exc.value.position == 2
        assert "not concave" in str(exc.value)

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text(f"{CURVE_COLUMNS[0]},{CURVE_COLUMNS[1]}\n0.1,1.0\n0.5,abc\n1.0,9.0\n", encoding="utf-8")
        with pytest.raises(CurveValidationError) as exc:
            load_curve_points(path)
        assert exc.value.position == 2
        assert str(exc.value).startswith("sample 2:")

    def test_positions_count_data_rows_like_market_files(self, tmp_path):
        # the first data line below the header is position 1 in both formats
        path = tmp_path / "curve.csv"
        path.write_text(f"{CURVE_COLUMNS[0]},{CURVE_COLUMNS[1]}\nzero,1.0\n0.5,5.0\n1.0,9.0\n", encoding="utf-8")
        with pytest.raises(CurveValidationError) as curve_exc:
            load_curve_points(path)
        with pytest.raises(MarketDataError) as market_exc:
            parse_market_csv(io.StringIO(",".join(MARKET_COLUMNS) + "\n0,10,zero,5,0,5\n"))
        assert curve_exc.value.position == market_exc.value.row == 1

    def test_missing_column(self, tmp_path):
        path = tmp_path / "curve.csv"
        path.write_text("x,h\n0.1,1\n0.5,5\n1,9\n", encoding="utf-8")
        with pytest.raises(CurveValidationError, match="missing columns"):
            load_curve_points(path)

    def test_written_points_reload(self, tmp_path, curve):
        reloaded = load_curve_points(write_curve_points(curve, tmp_path / "out.csv"))
        np.testing.assert_allclose(reloaded.x, curve.x)
        np.testing.assert_allclose(reloaded.h_norm, curve.h_norm)

    def test_must_end_at_full_load(self):
        with pytest.raises(CurveValidationError, match="full load"):
            ProductionCurve(x=[0.1, 0.3, 0.9], h_norm=[1.0, 4.0, 8.0])


class TestFitConcavePwl:
    """PWL fitting."""

    def test_single_segment_is_endpoint_secant(self):
        curve = reference_curve()
        pwl = fit_concave_pwl(curve, 1)
        assert pwl.n_segments == 1
        assert pwl.slopes[0] == pytest.approx((15.46 - 1.6) / 0.9)
        assert pwl.anchor_slope == pytest.approx(16.0)
        for c_max in (1.0, 100.0):
            assert eval_pwl(pwl, 0.1 * c_max, c_max) == pytest.approx(1.6 * c_max)
            assert eval_pwl(pwl, c_max, c_max) == pytest.approx(15.46 * c_max)

    def test_finer_fit_has_smaller_error(self, curve):
        coarse = approximation_error(curve, fit_concave_pwl(curve, 8))
        fine = approximation_error(curve, fit_concave_pwl(curve, 88))
        assert fine["max_under"] < coarse["max_under"]
        # secants of a concave curve never overestimate it
        assert coarse["max_over"] <= 1e-9

    @pytest.mark.parametrize("mode", ["secant", "origin-hull"])
    @pytest.mark.parametrize("n_segments", [1, 2, 8, 88])
    def test_slopes_strictly_decreasing(self, curve, mode, n_segments):
        pwl = fit_concave_pwl(curve, n_segments, mode=mode)
        assert np.all(np.diff(pwl.slopes) < 0)

    def test_breakpoints_match_curve(self, curve):
        pwl = fit_concave_pwl(curve, 8)
        c_max = 25.0
        for b in pwl.breakpoints:
            expected = curve.value(b) * c_max
            assert eval_pwl(pwl, b * c_max, c_max) == pytest.approx(expected, rel=1e-9)

    def test_origin_hull_passes_through_origin(self, curve):
        pwl = fit_concave_pwl(curve, 8, mode="origin-hull")
        assert pwl.x_min == 0.0
        assert pwl.segments[0].intercept == 0.0
        assert pwl.anchor_slope == pwl.slopes[0]

    def test_rejects_bad_arguments(self, curve):
        with pytest.raises(CurveValidationError):
            fit_concave_pwl(curve, 0)
        with pytest.raises(CurveValidationError, match="unknown fit mode"):
            fit_concave_pwl(curve, 4, mode="spline")


class TestEvalPwl:
    """Evaluation and efficiency."""

    def test_minimum_of_segments(self):
        pwl = PwlCurve(segments=(PwlSegment(20.0, 0.0), PwlSegment(10.0, 0.05)))
        assert eval_pwl(pwl, 30.0, 100.0) == pytest.approx(305.0)

    @pytest.mark.parametrize("mode", ["secant", "origin-hull"])
    def test_zero_power_gives_zero(self, curve, mode):
        pwl = fit_concave_pwl(curve, 8, mode=mode)
        assert eval_pwl(pwl, 0.0, 50.0) == 0.0

    @pytest.mark.parametrize("mode", ["secant", "origin-hull"])
    @pytest.mark.parametrize("n_segments", [8, 88])
    def test_output_scales_with_capacity(self, curve, mode, n_segments):
        pwl = fit_concave_pwl(curve, n_segments, mode=mode)
        loads = np.linspace(pwl.x_min if pwl.x_min > 0 else 0.01, 1.0, 37)
        unit = [eval_pwl(pwl, x, 1.0) for x in loads]
        for c_max in (0.5, 10.0, 25.0, 100.0):
            scaled = [eval_pwl(pwl, x * c_max, c_max) / c_max for x in loads]
            np.testing.assert_allclose(scaled, unit, rtol=1e-12, atol=1e-12)

    def test_out_of_range_power(self, pwl4):
        with pytest.raises(CurveValidationError):
            eval_pwl(pwl4, 11.0, 10.0)
        with pytest.raises(CurveValidationError):
            eval_pwl(pwl4, -1.0, 10.0)

    def test_efficiency_undefined_at_zero(self, pwl4):
        with pytest.raises(CurveValidationError, match="undefined"):
            efficiency(pwl4, 0.0, 10.0)

    def test_constant_efficiency_on_anchor(self):
        pwl = fit_concave_pwl(reference_curve(), 1)
        assert efficiency(pwl, 0.02, 1.0) == pytest.approx(16.0)
        assert efficiency(pwl, 0.05, 1.0) == pytest.approx(16.0)

    def test_peak_near_analytic_optimum(self):
        pwl = fit_concave_pwl(reference_curve(), 88)
        spacing = 0.9 / 88
        x_peak, _ = peak_efficiency(pwl, 1.0)
        assert abs(x_peak - 0.30) <= spacing

    def test_finer_fit_reaches_higher_peak(self):
        curve = reference_curve()
        _, coarse = peak_efficiency(fit_concave_pwl(curve, 8))
        _, fine = peak_efficiency(fit_concave_pwl(curve, 88))
        assert fine >= coarse


class TestPwlCurveValidation:
    """Shape invariants of PwlCurve."""

    def test_non_decreasing_slopes_rejected(self):
        with pytest.raises(CurveValidationError) as exc:
            PwlCurve(segments=(PwlSegment(10.0, 0.0), PwlSegment(10.0, 0.1)))
        assert exc.value.position == 2

    def test_first_segment_must_hit_origin_without_anchor(self):
        with pytest.raises(CurveValidationError, match="origin"):
            PwlCurve(segments=(PwlSegment(10.0, 0.5),))

    def test_empty_rejected(self):
        with pytest.raises(CurveValidationError):
            PwlCurve(segments=())

    def test_rows(self, pwl4):
        rows = pwl4.to_rows()
        assert [r["segment"] for r in rows] == list(range(pwl4.n_segments))
