"""
Normalized hydrogen-production curves of a single electrolyzer module.

A curve maps the load fraction x = p / C^max to the hydrogen output per MW of
module capacity (kg/h per MW). Curves are concave in x and their specific
production h(x)/x peaks inside the operating range.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Literal, TextIO, Union

import numpy as np
import pandas as pd

from app.errors import CurveValidationError

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ("load_fraction", "h_norm_kg_per_hour_per_mw")
CONCAVITY_TOL = 1e-9
MIN_SAMPLES = 3

Provenance = Literal["reference-parametric", "user-file"]


def _frozen(values: Any) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


def _validate_samples(x: np.ndarray, h: np.ndarray) -> None:
    if x.ndim != 1 or h.ndim != 1 or x.shape != h.shape:
        raise CurveValidationError("load fractions and outputs must be 1-D arrays of equal length")
    if x.size < MIN_SAMPLES:
        raise CurveValidationError(f"too few samples: {x.size} < {MIN_SAMPLES}")

    for i in range(x.size):
        if not (math.isfinite(x[i]) and math.isfinite(h[i])):
            raise CurveValidationError("non-finite sample", position=i + 1)

    if x[0] <= 0.0:
        raise CurveValidationError("minimum load fraction must be positive", position=1)
    for i in range(1, x.size):
        if x[i] <= x[i - 1]:
            raise CurveValidationError("load fractions must be strictly increasing", position=i + 1)
    if abs(x[-1] - 1.0) > 1e-9:
        raise CurveValidationError(
            f"curve must end at full load (last load fraction {x[-1]:.6g})", position=x.size
        )

    for i in range(x.size):
        if h[i] <= 0.0:
            raise CurveValidationError("hydrogen output must be strictly positive", position=i + 1)

    slopes = np.diff(h) / np.diff(x)
    for j in range(1, slopes.size):
        if slopes[j] - slopes[j - 1] > CONCAVITY_TOL:
            # x[j] is the kink between the two secants
            raise CurveValidationError("secant slope increases (curve not concave)", position=j + 1)

    peak = int(np.argmax(h / x))
    if peak == 0 or peak == x.size - 1:
        raise CurveValidationError(
            "specific production must peak strictly inside the operating range", position=peak + 1
        )


@dataclass(frozen=True, eq=False)
class ProductionCurve:
    """Sampled normalized production curve h_norm(x) on [x_min, 1]."""

    x: np.ndarray
    h_norm: np.ndarray
    provenance: Provenance = "user-file"
    parameters: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        x = _frozen(self.x)
        h = _frozen(self.h_norm)
        _validate_samples(x, h)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h_norm", h)

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    @property
    def n_samples(self) -> int:
        return int(self.x.size)

    def value(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """Linear interpolation of the samples; never extrapolates."""
        xs = np.asarray(x, dtype=float)
        if np.any(xs < self.x_min - 1e-12) or np.any(xs > 1.0 + 1e-12):
            raise CurveValidationError(f"load fraction outside [{self.x_min}, 1]")
        out = np.interp(xs, self.x, self.h_norm)
        return float(out) if out.ndim == 0 else out

    def specific_production(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """h_norm(x) / x in kg/MWh."""
        return self.value(x) / np.asarray(x, dtype=float)

    @property
    def peak_load_fraction(self) -> float:
        return float(self.x[int(np.argmax(self.h_norm / self.x))])


def reference_curve(
    alpha: float = 22.0,
    beta: float = 6.0,
    gamma: float = 0.54,
    x_min: float = 0.10,
    n_samples: int = 1001,
) -> ProductionCurve:
    """Parametric curve h_norm(x) = alpha*x - beta*x^2 - gamma sampled on [x_min, 1].

    Its specific production peaks at x* = sqrt(gamma / beta).
    """
    if alpha <= 0 or beta <= 0 or gamma <= 0:
        raise CurveValidationError("alpha, beta and gamma must be positive")
    if not 0.0 < x_min < 1.0:
        raise CurveValidationError(f"x_min must lie in (0, 1), got {x_min}")
    if n_samples < MIN_SAMPLES:
        raise CurveValidationError(f"too few samples: {n_samples} < {MIN_SAMPLES}")

    peak = math.sqrt(gamma / beta)
    if not x_min < peak < 1.0:
        raise CurveValidationError(
            f"efficiency peak x*={peak:.4f} must lie inside ({x_min}, 1)"
        )

    def h(v: Any) -> Any:
        return alpha * v - beta * v * v - gamma

    # concave, so positivity at both ends covers the whole range
    if h(x_min) <= 0 or h(1.0) <= 0:
        raise CurveValidationError("curve is not positive over the operating range")

    xs = np.linspace(x_min, 1.0, n_samples)
    logger.debug(f"Reference curve alpha={alpha} beta={beta} gamma={gamma} peak={peak:.4f}")
    return ProductionCurve(
        x=xs,
        h_norm=h(xs),
        provenance="reference-parametric",
        parameters={"alpha": alpha, "beta": beta, "gamma": gamma, "x_min": x_min},
    )


def load_curve_points(source: Union[str, Path, TextIO]) -> ProductionCurve:
    """Read a curve CSV (`load_fraction,h_norm_kg_per_hour_per_mw`) and validate it."""
    try:
        frame = pd.read_csv(source)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise CurveValidationError(f"unreadable curve file: {e}")

    missing = [c for c in CURVE_COLUMNS if c not in frame.columns]
    if missing:
        raise CurveValidationError(f"missing columns: {', '.join(missing)}")

    values = frame[list(CURVE_COLUMNS)].apply(pd.to_numeric, errors="coerce")
    bad = values.isna().any(axis=1)
    if bad.any():
        raise CurveValidationError("value does not parse as a number", position=int(np.argmax(bad.to_numpy())) + 1)

    curve = ProductionCurve(
        x=values[CURVE_COLUMNS[0]].to_numpy(),
        h_norm=values[CURVE_COLUMNS[1]].to_numpy(),
        provenance="user-file",
    )
    logger.info(f"Loaded production curve with {curve.n_samples} samples, x_min={curve.x_min:.3f}")
    return curve


def write_curve_points(curve: ProductionCurve, path: Union[str, Path]) -> Path:
    """Write curve samples in the same CSV schema `load_curve_points` reads."""
    out = Path(path)
    pd.DataFrame({CURVE_COLUMNS[0]: curve.x, CURVE_COLUMNS[1]: curve.h_norm}).to_csv(out, index=False)
    return out


def curve_summary(curve: ProductionCurve) -> Dict[str, float]:
    """Headline figures of a curve for logs and reports."""
    x_peak = curve.peak_load_fraction
    return {
        "x_min": curve.x_min,
        "n_samples": float(curve.n_samples),
        "peak_load_fraction": x_peak,
        "peak_specific_production": float(curve.specific_production(x_peak)),
        "full_load_specific_production": float(curve.specific_production(1.0)),
    }
