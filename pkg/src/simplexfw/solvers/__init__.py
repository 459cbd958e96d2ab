"""Frank-Wolfe solvers: classical baselines and the simplex-ball family."""

from .common import (
    TRACE_COLUMNS,
    ConvergenceTrace,
    InvalidBoundError,
    NumericalFailureError,
    SolverError,
    StepRule,
    StepSizer,
    Stop,
    backtracking_routine,
    default_lower_bound,
    envelope_bounds,
    envelope_violations,
    golden_section,
)
from .fw import ActiveSet, solve_afw, solve_fw, solve_pfw
from .rsfw import ACCELERATIONS, WarmStart, solve_rsfw, solve_rsfw_p
from .sfw import solve_sfw, solve_sfw_p

__all__ = [
    "TRACE_COLUMNS",
    "ACCELERATIONS",
    "ActiveSet",
    "ConvergenceTrace",
    "InvalidBoundError",
    "NumericalFailureError",
    "SolverError",
    "StepRule",
    "StepSizer",
    "Stop",
    "WarmStart",
    "backtracking_routine",
    "default_lower_bound",
    "envelope_bounds",
    "envelope_violations",
    "golden_section",
    "solve_afw",
    "solve_fw",
    "solve_pfw",
    "solve_rsfw",
    "solve_rsfw_p",
    "solve_sfw",
    "solve_sfw_p",
]
