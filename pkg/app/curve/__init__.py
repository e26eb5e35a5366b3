# Production curves and their piecewise-linear approximations
from app.curve.production import (
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

__all__ = [
    "ProductionCurve",
    "PwlCurve",
    "PwlSegment",
    "approximation_error",
    "curve_summary",
    "efficiency",
    "eval_pwl",
    "fit_concave_pwl",
    "load_curve_points",
    "peak_efficiency",
    "reference_curve",
    "write_curve_points",
]
