# Scheduling problem, MILP translation and schedule audit
from app.model.fleet import ElectrolyzerSpec, FleetConfig, homogeneous_fleet
from app.model.milp import (
    ROW_FAMILIES,
    MilpInstance,
    VariableIndex,
    build_milp,
    expected_family_counts,
    write_lp_file,
)
from app.model.problem import ScheduleProblem, build_problem, split_by_day
from app.model.schedule import (
    Schedule,
    ScheduleAudit,
    concat_schedules,
    empty_schedule,
    extract_schedule,
    verify_schedule,
)

__all__ = [
    "ROW_FAMILIES",
    "ElectrolyzerSpec",
    "FleetConfig",
    "MilpInstance",
    "Schedule",
    "ScheduleAudit",
    "ScheduleProblem",
    "VariableIndex",
    "build_milp",
    "build_problem",
    "concat_schedules",
    "empty_schedule",
    "expected_family_counts",
    "extract_schedule",
    "homogeneous_fleet",
    "split_by_day",
    "verify_schedule",
    "write_lp_file",
]
