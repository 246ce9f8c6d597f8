"""Mission metrics and lambda sweeps.

SR is the fraction of tasks visited, DQ the mean quality over visited tasks
and MSI folds both into one number normalised by the best achievable.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .core import (
    Instance,
    Route,
    Solution,
    Status,
    Visit,
    quality_sum,
)
from .exact import SolveLimits, restrict_modes, solve_exact, strongest_only

METHODS = ("exact", "colgen", "rsf-max", "rsf-min")
CSV_HEADER = ("instance", "method", "lambda", "sr", "dq", "msi", "ct_seconds", "status")


@dataclass(frozen=True)
class MetricReport:
    instance: str
    method: str
    lam: float
    sr: float
    dq: float
    msi: float
    compute_time: float
    status: Status
    visited: int = 0
    quality: float = 0.0
    objective: float = 0.0

    def csv_row(self, timing: bool = True) -> list[str]:
        ct = f"{self.compute_time:.3f}" if timing else "0.000"
        return [
            self.instance,
            self.method,
            f"{self.lam:g}",
            f"{self.sr:.6f}",
            f"{self.dq:.6f}",
            f"{self.msi:.6f}",
            ct,
            self.status.letter,
        ]


def success_rate(instance: Instance, solution: Solution) -> float:
    if instance.n_tasks == 0:
        return 0.0
    return solution.visited_count / instance.n_tasks


def dosage_quality(instance: Instance, solution: Solution) -> float:
    count = solution.visited_count
    if count == 0:
        return 0.0
    return min(1.0, quality_sum(instance, solution) / count)


def mission_success_index(instance: Instance, solution: Solution) -> float:
    if instance.n_tasks == 0:
        return 0.0
    total = solution.visited_count + quality_sum(instance, solution)
    # clamp away last-ulp overshoot when every task runs at p_max
    return min(1.0, total / (instance.n_tasks * (1.0 + instance.max_quality)))


def avg_lateness(instance: Instance, executed_log) -> float:
    """Mean overrun past each task's window end; 0 for an empty log."""
    log = list(executed_log)
    if not log:
        return 0.0
    late = [max(0.0, float(done) - instance.task(tid).window_end) for tid, done in log]
    return sum(late) / len(late)


def report(instance: Instance, solution: Solution, method: str | None = None, lam: float | None = None) -> MetricReport:
    return MetricReport(
        instance=instance.name,
        method=method or solution.method,
        lam=float(solution.lam if lam is None else lam),
        sr=success_rate(instance, solution),
        dq=dosage_quality(instance, solution),
        msi=mission_success_index(instance, solution),
        compute_time=solution.compute_time,
        status=solution.status,
        visited=solution.visited_count,
        quality=quality_sum(instance, solution),
        objective=solution.objective,
    )


def _lift_modes(instance: Instance, restricted: Instance, solution: Solution) -> Solution:
    """Translate mode indices of a restricted-instance solution back to ``instance``."""
    routes = []
    for r in solution.routes:
        visits = []
        for v in r.visits:
            kept = restricted.task(v.task_id).modes[v.mode_index]
            m = instance.task(v.task_id).modes.index(kept)
            visits.append(Visit(v.task_id, m, v.arrival))
        routes.append(Route(r.agent, tuple(visits), r.return_time))
    return replace(solution, routes=tuple(routes))


def solve_method(instance: Instance, method: str, lam: float, time_limit: float = 100.0, seed: int = 0) -> Solution:
    """Run one of :data:`METHODS`; the RS-F baselines pin every task to one mode.

    The returned solution always refers to ``instance``'s own mode indices.
    """
    if method == "exact":
        return solve_exact(instance, lam, SolveLimits(max_time=time_limit))
    if method == "colgen":
        from .colgen import ColgenConfig, run_colgen

        return run_colgen(instance, lam, ColgenConfig(total_time_limit=time_limit, seed=seed))
    if method in ("rsf-max", "rsf-min"):
        # max: only the strongest dose anywhere; min: each task's weakest dose
        restricted = strongest_only(instance) if method == "rsf-max" else restrict_modes(instance, "min")
        sol = solve_exact(restricted, lam, SolveLimits(max_time=time_limit))
        return replace(_lift_modes(instance, restricted, sol), method=method)
    raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def _sweep_row(args) -> MetricReport:
    instance, method, lam, time_limit, seed = args
    try:
        sol = solve_method(instance, method, lam, time_limit, seed)
    except Exception:  # a failed row is reported, the sweep goes on
        return MetricReport(instance.name, method, lam, 0.0, 0.0, 0.0, 0.0, Status.INFEASIBLE)
    return report(instance, sol, method, lam)


def pareto_sweep(
    instance: Instance,
    method: str,
    lambda_grid,
    time_limit: float = 100.0,
    seed: int = 0,
    workers: int = 1,
) -> list[MetricReport]:
    """One solve and one report per lambda, returned in ascending lambda order."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    grid = sorted(float(x) for x in lambda_grid)
    if any(not 0.0 <= x <= 1.0 for x in grid):
        raise ValueError("lambda values must lie in [0, 1]")
    jobs = [(instance, method, lam, time_limit, seed) for lam in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_sweep_row, jobs))
    return [_sweep_row(j) for j in jobs]


def reports_to_csv(reports, header: bool = True, timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(CSV_HEADER)
    for r in reports:
        writer.writerow(r.csv_row(timing))
    return buf.getvalue()
