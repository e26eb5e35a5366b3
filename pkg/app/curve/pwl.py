"""
Concave piecewise-linear (PWL) approximations of a production curve.

A PwlCurve is capacity-free: slopes are in kg/MWh and intercepts are normalized
by the module capacity, so one fit serves every module size. For a module of
capacity c and power p the approximation is

    min_i (a_i * p + b_i * c)          for p >= x_min * c
    anchor_slope * p                   for p <  x_min * c

The segments form a concave hull (slopes strictly decreasing). The anchor is the
origin chord to (x_min, h(x_min)); it only covers the region a running module
never enters and keeps an idle module at zero output.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np

from app.curve.production import ProductionCurve
from app.errors import CurveValidationError

logger = logging.getLogger(__name__)

FitMode = Literal["secant", "origin-hull"]
SLOPE_TOL = 1e-12
ORIGIN_TOL = 1e-9


@dataclass(frozen=True)
class PwlSegment:
    slope: float
    intercept: float


@dataclass(frozen=True, eq=False)
class PwlCurve:
    segments: Tuple[PwlSegment, ...]
    x_min: float = 0.0
    anchor_slope: Optional[float] = None
    breakpoints: Tuple[float, ...] = ()
    mode: str = "manual"

    def __post_init__(self) -> None:
        segments = tuple(self.segments)
        if not segments:
            raise CurveValidationError("PWL curve needs at least one segment")
        for i in range(1, len(segments)):
            if not segments[i].slope < segments[i - 1].slope:
                raise CurveValidationError("segment slopes must be strictly decreasing", position=i + 1, item="segment")
        if not 0.0 <= self.x_min < 1.0:
            raise CurveValidationError(f"x_min must lie in [0, 1), got {self.x_min}")
        if self.x_min == 0.0 and abs(segments[0].intercept) > ORIGIN_TOL:
            raise CurveValidationError("first segment must pass through the origin", position=1, item="segment")

        anchor = segments[0].slope if self.anchor_slope is None else float(self.anchor_slope)
        if anchor < 0:
            raise CurveValidationError("anchor slope must be non-negative")
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "anchor_slope", anchor)
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))

    @property
    def n_segments(self) -> int:
        return len(self.segments)

    @property
    def slopes(self) -> np.ndarray:
        return np.array([s.slope for s in self.segments])

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([s.intercept for s in self.segments])

    def evaluate(self, p: Union[float, np.ndarray], c_max: float) -> np.ndarray:
        """Vectorized evaluation without range checks."""
        p_arr = np.atleast_1d(np.asarray(p, dtype=float))
        hull = np.min(np.outer(p_arr, self.slopes) + self.intercepts * c_max, axis=1)
        return np.where(p_arr < self.x_min * c_max, self.anchor_slope * p_arr, hull)

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"segment": i, "slope_kg_per_mwh": s.slope, "intercept_normalized": s.intercept}
            for i, s in enumerate(self.segments)
        ]


def _check_power(p: float, c_max: float) -> None:
    if c_max <= 0:
        raise CurveValidationError(f"module capacity must be positive, got {c_max}")
    tol = 1e-9 * c_max
    if p < -tol or p > c_max + tol:
        raise CurveValidationError(f"power {p} outside [0, {c_max}]")


def eval_pwl(pwl: PwlCurve, p: float, c_max: float) -> float:
    """Hydrogen output in kg/h of a module of capacity c_max consuming p MW."""
    _check_power(p, c_max)
    p = min(max(p, 0.0), c_max)
    return float(pwl.evaluate(p, c_max)[0])


def efficiency(pwl: PwlCurve, p: float, c_max: float) -> float:
    """Specific production in kg/MWh at power p > 0."""
    if p <= 0:
        raise CurveValidationError("efficiency is undefined at zero power")
    return eval_pwl(pwl, p, c_max) / p


def _secant_fit(curve: ProductionCurve, n_segments: int) -> PwlCurve:
    xs = np.linspace(curve.x_min, 1.0, n_segments + 1)
    hs = np.asarray(curve.value(xs))
    slopes = np.diff(hs) / np.diff(xs)
    intercepts = hs[:-1] - slopes * xs[:-1]

    segments: List[PwlSegment] = []
    breakpoints = [float(xs[0])]
    for k in range(n_segments):
        if segments and slopes[k] >= segments[-1].slope - SLOPE_TOL:
            # collinear with the previous secant: extend it
            breakpoints[-1] = float(xs[k + 1])
            continue
        segments.append(PwlSegment(float(slopes[k]), float(intercepts[k])))
        breakpoints.append(float(xs[k + 1]))

    if len(segments) < n_segments:
        logger.debug(f"Merged {n_segments - len(segments)} collinear secants")
    return PwlCurve(
        segments=tuple(segments),
        x_min=float(xs[0]),
        anchor_slope=float(hs[0] / xs[0]),
        breakpoints=tuple(breakpoints),
        mode="secant",
    )


def _origin_hull_fit(curve: ProductionCurve, n_segments: int) -> PwlCurve:
    xs = np.linspace(curve.x_min, 1.0, n_segments + 1)
    hs = np.asarray(curve.value(xs))
    points = [(0.0, 0.0)] + list(zip(xs.tolist(), hs.tolist()))

    hull: List[Tuple[float, float]] = []
    for pt in points:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            # drop the middle vertex when it lies on or below the chord
            if (x1 - x0) * (pt[1] - y0) - (y1 - y0) * (pt[0] - x0) >= 0:
                hull.pop()
            else:
                break
        hull.append(pt)

    segments = []
    for (x0, y0), (x1, y1) in zip(hull[:-1], hull[1:]):
        slope = (y1 - y0) / (x1 - x0)
        segments.append(PwlSegment(slope, y0 - slope * x0))
    return PwlCurve(
        segments=tuple(segments),
        x_min=0.0,
        breakpoints=tuple(x for x, _ in hull),
        mode="origin-hull",
    )


def fit_concave_pwl(curve: ProductionCurve, n_segments: int, mode: FitMode = "secant") -> PwlCurve:
    """Fit a concave PWL approximation with equally spaced load-fraction breakpoints."""
    if n_segments < 1:
        raise CurveValidationError(f"n_segments must be at least 1, got {n_segments}")
    if mode == "secant":
        pwl = _secant_fit(curve, n_segments)
    elif mode == "origin-hull":
        pwl = _origin_hull_fit(curve, n_segments)
    else:
        raise CurveValidationError(f"unknown fit mode '{mode}'")
    logger.info(f"Fitted {mode} PWL: {n_segments} requested, {pwl.n_segments} segments")
    return pwl


def approximation_error(curve: ProductionCurve, pwl: PwlCurve, n_grid: int = 10_000) -> Dict[str, float]:
    """Dense-grid comparison of the PWL against the sampled curve on [x_min, 1]."""
    grid = np.linspace(curve.x_min, 1.0, n_grid)
    diff = np.asarray(curve.value(grid)) - pwl.evaluate(grid, 1.0)
    return {
        "max_abs": float(np.max(np.abs(diff))),
        "max_under": float(np.max(diff)),
        "max_over": float(np.max(-diff)),
    }


def peak_efficiency(pwl: PwlCurve, c_max: float = 1.0, n_grid: int = 10_000) -> Tuple[float, float]:
    """(power, kg/MWh) of the highest PWL efficiency on a dense grid over (0, c_max]."""
    grid = np.linspace(c_max / n_grid, c_max, n_grid)
    eff = pwl.evaluate(grid, c_max) / grid
    k = int(np.argmax(eff))
    return float(grid[k]), float(eff[k])
