"""
Result files. Every file is written to a temporary sibling and renamed into place.

Schedule series (`<label>_schedule.{csv,json}`), one row per hour:
    hour, p_grid_mw, total_power_mw, then p_e_m<k>_mw and h_m<k>_kg per module k
Metrics (`<label>_metrics.json`, or `.csv` as a single row): ScenarioResult
    without the hourly series; the JSON form also carries `solve`.
Comparison (`comparison.{csv,json}`): ComparisonTable rows.
Hour detail (`hour_<h>.{csv,json}`): HourDetailTable rows.
PWL fit (`pwl_<n>seg_<mode>.{csv,json}`): segment, slope_kg_per_mwh, intercept_normalized.
"""
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Union

import pandas as pd

from app.curve.pwl import PwlCurve
from app.errors import OutputError
from app.experiments.compare import ComparisonTable, HourDetailTable
from app.experiments.scenario import ScenarioResult

logger = logging.getLogger(__name__)

OutputFormat = Literal["csv", "json"]


def _atomic_write(path: Path, writer: Callable[[Path], None]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        os.close(fd)
        try:
            writer(Path(tmp))
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
    except OSError as e:
        raise OutputError(str(e), path=path)
    return path


def _write_frame(frame: pd.DataFrame, path: Path, fmt: OutputFormat) -> Path:
    if fmt == "csv":
        return _atomic_write(path, lambda p: frame.to_csv(p, index=False))
    text = frame.to_json(orient="records", indent=2)
    return _atomic_write(path, lambda p: p.write_text(text, encoding="utf-8"))


def schedule_frame(result: ScenarioResult) -> pd.DataFrame:
    s = result.hourly
    columns: Dict[str, List[Any]] = {
        "hour": list(range(result.horizon)),
        "p_grid_mw": s.p_grid_mw,
        "total_power_mw": s.total_power_mw,
    }
    for k in range(result.n_modules):
        columns[f"p_e_m{k}_mw"] = [row[k] for row in s.module_power_mw]
        columns[f"h_m{k}_kg"] = [row[k] for row in s.module_hydrogen_kg]
    return pd.DataFrame(columns)


def metrics_dict(result: ScenarioResult) -> Dict[str, Any]:
    return result.model_dump(mode="json", exclude={"hourly"})


def emit_outputs(result: ScenarioResult, directory: Union[str, Path], fmt: OutputFormat = "csv") -> List[Path]:
    """Write the schedule series and metrics of one scenario."""
    out = Path(directory)
    written = [_write_frame(schedule_frame(result), out / f"{result.label}_schedule.{fmt}", fmt)]

    metrics = metrics_dict(result)
    if fmt == "json":
        text = json.dumps(metrics, indent=2)
        target = out / f"{result.label}_metrics.json"
        written.append(_atomic_write(target, lambda p: p.write_text(text, encoding="utf-8")))
    else:
        solve = metrics.pop("solve")
        flat = {**metrics, **{f"solve_{k}": v for k, v in solve.items()}}
        written.append(_write_frame(pd.DataFrame([flat]), out / f"{result.label}_metrics.csv", fmt))
    logger.info(f"Wrote {', '.join(str(p) for p in written)}")
    return written


def emit_comparison(table: ComparisonTable, directory: Union[str, Path], fmt: OutputFormat = "csv") -> Path:
    frame = pd.DataFrame([row.model_dump() for row in table.rows])
    return _write_frame(frame, Path(directory) / f"comparison.{fmt}", fmt)


def emit_hour_detail(table: HourDetailTable, directory: Union[str, Path], fmt: OutputFormat = "csv") -> Path:
    frame = pd.DataFrame([row.model_dump() for row in table.rows])
    return _write_frame(frame, Path(directory) / f"hour_{table.hour}.{fmt}", fmt)


def load_metrics(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a metrics JSON file back."""
    return json.loads(Path(path).read_text(encoding="utf-8"))


def emit_pwl(pwl: PwlCurve, directory: Union[str, Path], fmt: OutputFormat = "csv") -> Path:
    frame = pd.DataFrame(pwl.to_rows())
    return _write_frame(frame, Path(directory) / f"pwl_{pwl.n_segments}seg_{pwl.mode}.{fmt}", fmt)
