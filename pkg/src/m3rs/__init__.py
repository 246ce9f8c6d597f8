"""Multi-robot, multi-mode routing and scheduling.

Plan routes for a fleet of robots visiting tasks inside time windows, where
each task can be served in one of several modes trading time and energy for
quality.  Solvers: an exact branch-and-bound (:func:`solve_exact`) and column
generation (:func:`run_colgen`), plus fixed-mode baselines via
:func:`restrict_modes`.
"""

from .colgen import ColgenConfig, ColumnPool, build_rmp, init_pool, run_colgen, solve_final_integer
from .core import (
    TOL,
    DuplicateTask,
    FeasibilityReport,
    Fleet,
    Instance,
    InstanceError,
    Mode,
    Route,
    ScheduleFailure,
    Solution,
    Status,
    Task,
    UnknownTaskId,
    Violation,
    Visit,
    Weights,
    check_solution,
    earliest_schedule,
    objective_value,
)
from .exact import Column, SolveLimits, restrict_modes, solve_exact, solve_pricing, strongest_only
from .instgen import DEFAULT_CATALOG, GenSpec, InfeasibleSpec, generate, relax_start, with_agents
from .lp import LpProblem, LpResult, LpStatus, solve_lp
from .metrics import (
    MetricReport,
    avg_lateness,
    dosage_quality,
    mission_success_index,
    pareto_sweep,
    success_rate,
)
from .oracle import TooLarge, enumerate_optimal

__version__ = "0.1.0"
