"""Command-line entry point for the electrolyzer module scheduler.

Verbs
-----
    h2sched fit-curve   --segments 88 --output-dir results
    h2sched schedule    --modules 4 --capacity 25 --backend highs
    h2sched compare     --modules 1,2,4,10 --segments 8,88 --total-capacity 100
    h2sched hour-detail --hour 18 --modules 1,2,4,10 --segments 8,88
    h2sched demo-data   --out week.csv

Flags override the scenario config (`--config`, else H2SCHED_CONFIG_PATH, else
app/config.runtime.json). Exit codes: 0 success, 1 input or solver error,
2 schedule failed verification.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from app.config import PlantConfig, load_config
from app.curve.production import curve_summary, write_curve_points
from app.curve.pwl import approximation_error, fit_concave_pwl, peak_efficiency
from app.errors import ConfigError, SchedulerError, VerificationError
from app.experiments.compare import ComparisonTable, compare_configurations, hour_detail
from app.experiments.outputs import emit_comparison, emit_hour_detail, emit_outputs, emit_pwl
from app.experiments.scenario import (
    ScenarioResult,
    SegmentChoice,
    resolve_curve,
    resolve_market,
    run_scenario,
    run_sweep,
)
from app.market.ingest import write_market_csv

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")
FIT_MODES = ("secant", "origin-hull")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNVERIFIED = 2


def _int_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _segment_list(text: str) -> List[SegmentChoice]:
    """Parse `8:origin-hull,88` into segment counts with optional fit modes."""
    choices = []
    for item in (v.strip() for v in text.split(",")):
        if not item:
            continue
        count, _, mode = item.partition(":")
        try:
            n = int(count)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a segment count, got '{item}'")
        if mode and mode not in FIT_MODES:
            raise argparse.ArgumentTypeError(f"unknown fit mode '{mode}' (choose from {', '.join(FIT_MODES)})")
        choices.append(SegmentChoice(n, mode or None))
    if not choices:
        raise argparse.ArgumentTypeError("expected at least one segment count")
    if len({c.segments for c in choices}) != len(choices):
        raise argparse.ArgumentTypeError(f"repeated segment count in '{text}'")
    return choices


def _add_curve_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("production curve")
    g.add_argument("--curve", metavar="CSV", help="Curve samples (load_fraction, h_norm_kg_per_hour_per_mw).")
    g.add_argument("--alpha", type=float, help="Reference curve alpha.")
    g.add_argument("--beta", type=float, help="Reference curve beta.")
    g.add_argument("--gamma", type=float, help="Reference curve gamma.")
    g.add_argument("--x-min", type=float, help="Reference curve minimum load fraction.")
    g.add_argument("--fit-mode", choices=FIT_MODES, help="PWL fit mode.")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--backend", choices=("branch-and-bound", "highs"), help="MILP backend.")
    g.add_argument("--lp-engine", choices=("simplex", "highs", "auto"), help="Relaxation engine for branch-and-bound.")
    g.add_argument("--gap", type=float, metavar="REL", help="Relative MIP gap.")
    g.add_argument("--node-limit", type=int, metavar="N")
    g.add_argument("--time-limit", type=float, metavar="SECONDS")
    g.add_argument("--day-split", action="store_true", default=None, help="Solve 24-hour windows in sequence.")


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--market", metavar="CSV", help="Market file (default: bundled synthetic week).")
    p.add_argument("--c-min-fraction", type=float, help="Minimum operating load fraction per module.")
    p.add_argument("--hydrogen-price", type=float, metavar="USD_PER_KG")
    _add_curve_args(p)
    _add_solver_args(p)
    _add_output_args(p)


def _add_output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output-dir", metavar="DIR", help="Directory for result files.")
    p.add_argument("--format", choices=("csv", "json"), help="Result file format.")


def _build_parser() -> argparse.ArgumentParser:
    """Build the CLI argument parser."""
    p = argparse.ArgumentParser(
        prog="h2sched",
        description="Wind + multi-module electrolyzer day-ahead scheduler",
    )
    p.add_argument("--config", metavar="PATH", help="Scenario config JSON.")
    p.add_argument("--log-level", choices=LOG_LEVELS, help="Logging level.")
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit-curve", help="Fit a concave PWL to the production curve.")
    _add_curve_args(fit)
    fit.add_argument("--segments", type=int, help="Number of PWL segments.")
    fit.add_argument("--samples-out", metavar="CSV", help="Also write the sampled curve here.")
    _add_output_args(fit)

    sched = sub.add_parser("schedule", help="Schedule one fleet configuration.")
    sched.add_argument("--modules", type=int, help="Number of identical modules.")
    sched.add_argument("--capacity", type=float, metavar="MW", help="Capacity of each module.")
    sched.add_argument("--segments", type=int, help="Number of PWL segments.")
    sched.add_argument("--label", help="Result file prefix.")
    sched.add_argument("--dump-lp", metavar="PATH", help="Write the MILP in CPLEX LP format.")
    _add_scenario_args(sched)

    for name, text in (
        ("compare", "Compare module counts at fixed total capacity."),
        ("hour-detail", "Per-configuration detail at one hour."),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--modules", type=_int_list, default=[1, 2, 4, 10], metavar="LIST")
        sp.add_argument(
            "--segments",
            type=_segment_list,
            metavar="LIST",
            help="Segment counts with optional fit modes, e.g. 8:origin-hull,88.",
        )
        sp.add_argument("--total-capacity", type=float, metavar="MW")
        if name == "hour-detail":
            sp.add_argument("--hour", type=int, required=True, help="Hour index within the horizon.")
        _add_scenario_args(sp)

    demo = sub.add_parser("demo-data", help="Write the bundled synthetic market week.")
    demo.add_argument("--out", required=True, metavar="CSV")
    return p


def _override(config: PlantConfig, args: argparse.Namespace) -> PlantConfig:
    """Apply the flags that were given on top of the config."""
    flags: Dict[str, Dict[str, str]] = {
        "fleet": {"modules": "n_modules", "capacity": "module_capacity_mw"},
        "electrolyzer": {"c_min_fraction": "c_min_fraction", "hydrogen_price": "hydrogen_price_usd_kg"},
        "curve": {
            "curve": "source",
            "alpha": "alpha",
            "beta": "beta",
            "gamma": "gamma",
            "x_min": "x_min",
            "fit_mode": "fit_mode",
        },
        "market": {"market": "path"},
        "solver": {
            "backend": "backend",
            "lp_engine": "lp_engine",
            "gap": "relative_gap",
            "node_limit": "node_limit",
            "time_limit": "time_limit",
            "day_split": "day_split",
        },
        "output": {"output_dir": "directory", "format": "format"},
    }
    data = config.model_dump()
    for section, mapping in flags.items():
        for flag, key in mapping.items():
            value = getattr(args, flag, None)
            if value is not None and not isinstance(value, list):
                data[section][key] = value
    segments = getattr(args, "segments", None)
    if isinstance(segments, int):
        data["curve"]["segments"] = segments
    try:
        return PlantConfig(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid command-line override: {e.errors()[0]['msg']}")


def _print_result(result: ScenarioResult) -> None:
    s = result.solve
    print()
    print("=" * 60)
    print(f"  Scenario: {result.label}")
    print("=" * 60)
    print(f"  Modules:               {result.n_modules} x {result.module_capacity_mw:g} MW")
    print(f"  PWL segments:          {result.segments} ({result.fit_mode})")
    print(f"  Power consumed:        {result.total_power_mwh:,.2f} MWh")
    print(f"  Hydrogen produced:     {result.total_hydrogen_kg:,.2f} kg")
    print(f"  Total revenue:         {result.total_revenue_usd:,.2f} USD")
    print(f"    grid sales:          {result.grid_revenue_usd:,.2f} USD")
    print(f"    hydrogen:            {result.hydrogen_revenue_usd:,.2f} USD")
    print(f"  Operating hours:       {result.operating_hours}")
    print(f"  Solver:                {s.backend} {s.status.value}, gap {s.gap:.2e}, {s.node_count} nodes")
    print("=" * 60)


def _print_table(rows: Sequence[Any]) -> None:
    print(pd.DataFrame([r.model_dump() for r in rows]).to_string(index=False))


def _cmd_fit_curve(config: PlantConfig, args: argparse.Namespace) -> int:
    curve = resolve_curve(config)
    pwl = fit_concave_pwl(curve, config.curve.segments, mode=config.curve.fit_mode)
    error = approximation_error(curve, pwl)
    x_peak, eff_peak = peak_efficiency(pwl)
    summary = curve_summary(curve)
    emit_pwl(pwl, config.output.directory, config.output.format)
    if args.samples_out:
        write_curve_points(curve, args.samples_out)
    print(f"segments: {pwl.n_segments} ({pwl.mode}), x_min {pwl.x_min:.3f}")
    print(f"curve peak: {summary['peak_specific_production']:.4f} kg/MWh at load {summary['peak_load_fraction']:.3f}")
    print(f"pwl peak:   {eff_peak:.4f} kg/MWh at load {x_peak:.3f}")
    print(f"max |error| {error['max_abs']:.4g}, under {error['max_under']:.4g}, over {error['max_over']:.4g}")
    return EXIT_OK


def _cmd_schedule(config: PlantConfig, args: argparse.Namespace) -> int:
    dump = Path(args.dump_lp) if args.dump_lp else None
    result = run_scenario(config, label=args.label, dump_lp=dump)
    emit_outputs(result, config.output.directory, config.output.format)
    _print_result(result)
    return EXIT_OK


def _sweep(config: PlantConfig, args: argparse.Namespace) -> Dict[int, List[ScenarioResult]]:
    segments = args.segments or [SegmentChoice(config.curve.segments)]
    results = run_sweep(
        config,
        modules=args.modules,
        segments=segments,
        market=resolve_market(config),
        curve=resolve_curve(config),
        total_capacity=args.total_capacity,
        fit_mode=config.curve.fit_mode,
    )
    for per_segment in results.values():
        for result in per_segment:
            emit_outputs(result, config.output.directory, config.output.format)
    return results


def _cmd_compare(config: PlantConfig, args: argparse.Namespace) -> int:
    results = _sweep(config, args)
    out = Path(config.output.directory)
    for n_seg, per_segment in results.items():
        table: ComparisonTable = compare_configurations(per_segment)
        target = out / f"{n_seg}seg" if len(results) > 1 else out
        emit_comparison(table, target, config.output.format)
        print(f"\n{n_seg} segments, baseline {table.baseline}")
        _print_table(table.rows)
    return EXIT_OK


def _cmd_hour_detail(config: PlantConfig, args: argparse.Namespace) -> int:
    results = _sweep(config, args)
    flat = [r for per_segment in results.values() for r in per_segment]
    table = hour_detail(flat, args.hour)
    emit_hour_detail(table, config.output.directory, config.output.format)
    print(f"\nhour {table.hour}")
    _print_table(table.rows)
    return EXIT_OK


def _cmd_demo_data(config: PlantConfig, args: argparse.Namespace) -> int:
    path = write_market_csv(resolve_market(config), args.out)
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "fit-curve": _cmd_fit_curve,
    "schedule": _cmd_schedule,
    "compare": _cmd_compare,
    "hour-detail": _cmd_hour_detail,
    "demo-data": _cmd_demo_data,
}


def run(args: argparse.Namespace) -> int:
    """Execute one verb; returns the process exit code."""
    try:
        config = load_config(args.config)
        if not args.log_level and not os.getenv("H2SCHED_LOG_LEVEL"):
            logging.getLogger().setLevel(config.logging.level)
        config = _override(config, args)
        return COMMANDS[args.command](config, args)
    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        return EXIT_UNVERIFIED
    except SchedulerError as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_ERROR


def _log_level(args: argparse.Namespace) -> str:
    level = args.log_level or os.getenv("H2SCHED_LOG_LEVEL", "INFO").upper()
    return level if level in LOG_LEVELS else "INFO"


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Parse CLI arguments and run the requested verb."""
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=_log_level(args), format=LOG_FORMAT)
    sys.exit(run(args))


if __name__ == "__main__":
    main()
