# Scenario runs, comparisons and result files
from app.experiments.compare import (
    ComparisonRow,
    ComparisonTable,
    HourDetailRow,
    HourDetailTable,
    compare_configurations,
    hour_detail,
    percent_increase,
)
from app.experiments.outputs import (
    emit_comparison,
    emit_hour_detail,
    emit_outputs,
    emit_pwl,
    load_metrics,
)
from app.experiments.scenario import ScenarioResult, SegmentChoice, run_scenario, run_sweep, variant

__all__ = [
    "ComparisonRow",
    "ComparisonTable",
    "HourDetailRow",
    "HourDetailTable",
    "ScenarioResult",
    "SegmentChoice",
    "compare_configurations",
    "emit_comparison",
    "emit_hour_detail",
    "emit_outputs",
    "emit_pwl",
    "hour_detail",
    "load_metrics",
    "percent_increase",
    "run_scenario",
    "run_sweep",
    "variant",
]
