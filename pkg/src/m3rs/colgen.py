"""Column generation over single-agent schedules.

The restricted master problem (RMP) picks at most one column per task and at
most ``fleet.count`` columns overall.  Its duals price tasks for the pricing
search, which runs on a random task subset each round.  A full-set pricing
round is required before convergence is claimed.  The pool is finally
re-solved as an integer set-packing problem.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Instance,
    Route,
    Solution,
    Status,
    Weights,
    as_weights,
    earliest_schedule,
    empty_solution,
    objective_value,
)
from .exact import EPS, Column, SolveLimits, make_column, solve_pricing
from .lp import LpProblem, LpStatus, solve_lp

BOUND_TOL = 1e-6


@dataclass(frozen=True)
class ColgenConfig:
    subset_size: int = 12
    rmp_time_limit: float = 10.0
    pricing_time_limit: float = 30.0
    total_time_limit: float = 100.0
    max_iterations: int = 200
    pool_cap: int = 20
    # LP-support columns completed into full fleets before the integer solve
    dive_columns: int = 10
    seed: int = 0
    # node limits keep pricing deterministic; None leaves only the clock
    pricing_node_limit: int | None = 500_000
    quick_pricing_nodes: int | None = 20_000

    def __post_init__(self):
        if self.subset_size < 1:
            raise ValueError("subset_size must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.pool_cap < 1:
            raise ValueError("pool_cap must be positive")
        for name in ("rmp_time_limit", "pricing_time_limit", "total_time_limit"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.dive_columns < 0:
            raise ValueError("dive_columns must be >= 0")
        for name in ("pricing_node_limit", "quick_pricing_nodes"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class ColumnPool:
    columns: list[Column] = field(default_factory=list)
    iterations: int = 0
    columns_added: int = 0
    pricing_rounds: int = 0
    _ids: set[str] = field(default_factory=set, repr=False)

    def add(self, column: Column) -> bool:
        if column.id in self._ids:
            return False
        self._ids.add(column.id)
        self.columns.append(column)
        self.columns_added += 1
        return True

    def __len__(self):
        return len(self.columns)

    def __contains__(self, column_id: str) -> bool:
        return column_id in self._ids


def init_pool(instance: Instance, w: Weights | float) -> ColumnPool:
    """One column per task holding its best feasible single-visit schedule."""
    w = as_weights(w)
    pool = ColumnPool()
    for task in instance.tasks:
        best = None
        for m, mode in enumerate(task.modes):
            route = earliest_schedule(instance, [(task.id, m)])
            if not isinstance(route, Route):
                continue
            key = (w.visit_value(mode.quality), mode.quality)
            if best is None or key > best[0]:
                best = (key, route)
        if best is not None:
            pool.add(make_column(instance, best[1], w))
    return pool


def build_rmp(pool: ColumnPool, instance: Instance, w: Weights | float | None = None) -> LpProblem:
    """LP relaxation: one variable per column, task rows then the fleet row.

    Column costs were fixed with the weights the pool was built for, so ``w``
    is accepted only for symmetry with the other entry points.
    """
    if not len(pool):
        raise ValueError("empty column pool")
    n = instance.n_tasks
    A = np.zeros((n + 1, len(pool)))
    for j, col in enumerate(pool.columns):
        A[:n, j] = col.coverage
    A[n, :] = 1.0
    b = np.ones(n + 1)
    b[n] = instance.fleet.count
    c = np.array([col.cost for col in pool.columns])
    return LpProblem(c, A, b)


def solve_final_integer(pool: ColumnPool, instance: Instance) -> list[Column]:
    """Best set of pairwise task-disjoint columns, at most one per agent.

    Depth-first include/exclude over columns sorted by cost, bounded by the
    smaller of the top remaining costs and a per-task share bound.
    """
    if not len(pool):
        return []
    k_max = instance.fleet.count
    cols = sorted(pool.columns, key=lambda c: (-c.cost, c.id))
    cols = [c for c in cols if c.cost > 0]
    masks = [sum(1 << i for i, a in enumerate(c.coverage) if a) for c in cols]
    costs = [c.cost for c in cols]
    n = instance.n_tasks
    # best value per covered task any column can offer
    share = [0.0] * n
    for c, m in zip(costs, masks):
        cnt = bin(m).count("1")
        if cnt == 0:
            continue
        per = c / cnt
        for i in range(n):
            if m >> i & 1 and per > share[i]:
                share[i] = per

    best_val = 0.0
    best_sel: list[int] = []

    def bound(j, used, left):
        top = 0.0
        taken = 0
        for q in range(j, len(cols)):
            if taken >= left:
                break
            if not masks[q] & used:
                top += costs[q]
                taken += 1
        per_task = sum(share[i] for i in range(n) if not used >> i & 1)
        return min(top, per_task)

    def dfs(j, used, val, sel):
        nonlocal best_val, best_sel
        if val > best_val + 1e-12:
            best_val, best_sel = val, list(sel)
        left = k_max - len(sel)
        if left == 0 or j >= len(cols):
            return
        if val + bound(j, used, left) <= best_val + 1e-12:
            return
        for q in range(j, len(cols)):
            if masks[q] & used:
                continue
            sel.append(q)
            dfs(q + 1, used | masks[q], val + costs[q], sel)
            sel.pop()
            if val + bound(q + 1, used, left) <= best_val + 1e-12:
                return

    dfs(0, 0, 0.0, [])
    return [cols[q] for q in best_sel]


def columns_to_routes(columns) -> tuple[Route, ...]:
    ordered = sorted(columns, key=lambda c: (c.visits[0].arrival if c.visits else 0.0, c.id))
    return tuple(Route(k, c.visits, c.return_time) for k, c in enumerate(ordered))


def dive(instance: Instance, w: Weights, pool: ColumnPool, theta, config: ColgenConfig, deadline: float) -> int:
    """Complete the heaviest LP-support columns into whole fleets.

    Each seed column is fixed and the remaining agents are filled one at a
    time with the best route over still-uncovered tasks (zero prices).  The
    routes found are added to the pool; returns how many were new.
    """
    support = [j for j in np.argsort(-np.asarray(theta), kind="stable") if theta[j] > 1e-9]
    seeds = [pool.columns[j] for j in support[: config.dive_columns]]
    zero = [0.0] * instance.n_tasks
    added = 0
    for seed_col in seeds:
        covered = set(seed_col.task_ids)
        for _ in range(instance.fleet.count - 1):
            left = [t.id for t in instance.tasks if t.id not in covered]
            remaining = deadline - time.perf_counter()
            if not left or remaining <= 0:
                return added
            limits = SolveLimits(max_time=min(config.pricing_time_limit, remaining), max_nodes=config.pricing_node_limit)
            found = solve_pricing(instance, left, zero, w, limits, pool_cap=1)
            if not found:
                break
            added += pool.add(found[0])
            covered.update(found[0].task_ids)
    return added


def run_colgen(instance: Instance, w: Weights | float, config: ColgenConfig | None = None) -> Solution:
    """Column generation followed by an integer re-solve of the final pool.

    ``meta["trace"]`` holds one dict per iteration with the RMP objective,
    pool size, best reduced cost found and whether the round priced the full
    task set.  ``meta["lp_bound"]`` is the LP optimum over the final pool.
    """
    w = as_weights(w)
    config = config or ColgenConfig()
    start = time.perf_counter()
    n = instance.n_tasks
    pool = init_pool(instance, w)
    if not len(pool):
        return empty_solution(
            Status.OPTIMAL if n == 0 else Status.FEASIBLE,
            method="colgen",
            lam=w.lam,
            compute_time=time.perf_counter() - start,
            meta={"trace": [], "lp_bound": 0.0, "stop": "empty", "pool_size": 0},
        )

    rng = np.random.default_rng(config.seed)
    trace = []
    certified = False
    stop = None
    lp_obj = None
    lp_size = -1
    res = None

    def elapsed():
        return time.perf_counter() - start

    def price(subset, duals, fleet_dual):
        # a cheap node-capped pass first; the full search only when that pass
        # found nothing and was cut short (so no certificate yet)
        found = None
        for nodes in (config.quick_pricing_nodes, config.pricing_node_limit):
            budget = max(1e-3, min(config.pricing_time_limit, config.total_time_limit - elapsed()))
            limits = SolveLimits(max_time=budget, max_nodes=nodes)
            pool.pricing_rounds += 1
            found = solve_pricing(instance, subset, duals, w, limits, config.pool_cap, fleet_dual)
            if found or found.exhausted:
                break
        return found

    while True:
        if elapsed() >= config.total_time_limit:
            stop = "time"
            break
        if pool.iterations >= config.max_iterations:
            stop = "iterations"
            break

        t0 = time.perf_counter()
        res = solve_lp(build_rmp(pool, instance, w))
        if res.status is not LpStatus.OPTIMAL:
            raise RuntimeError(f"restricted master returned {res.status.value}")
        lp_obj, lp_size = res.objective, len(pool)
        if time.perf_counter() - t0 > config.rmp_time_limit:
            stop = "time"
            break
        duals, fleet_dual = res.dual[:n], float(res.dual[n])
        pool.iterations += 1

        size = min(config.subset_size, n)
        subset = sorted(int(i) for i in rng.choice(n, size=size, replace=False))
        ids = [instance.tasks[i].id for i in subset]
        found = price(ids, duals, fleet_dual)
        full = size == n
        added = sum(pool.add(c) for c in found)
        if not added and not full and elapsed() < config.total_time_limit:
            found = price([t.id for t in instance.tasks], duals, fleet_dual)
            full = True
            added = sum(pool.add(c) for c in found)
        best_rc = found[0].reduced_cost(duals, fleet_dual) if found else 0.0
        trace.append(
            {
                "iteration": pool.iterations,
                "pool_size": len(pool),
                "rmp_objective": lp_obj,
                "best_reduced_cost": best_rc,
                "full_round": full,
                "exhausted": found.exhausted,
            }
        )
        if not added:
            if full and found.exhausted and not found:
                certified = True
                stop = "converged"
            else:
                # time ran out before the full round, or pricing kept returning
                # pool columns (numerical noise) or hit its limits
                stop = "time" if elapsed() >= config.total_time_limit else "stalled"
            break

    if lp_size != len(pool):
        res = solve_lp(build_rmp(pool, instance, w))
        lp_obj, lp_size = res.objective, len(pool)
    if config.dive_columns and stop != "time":
        dive(instance, w, pool, res.primal, config, start + config.total_time_limit)
        if lp_size != len(pool):
            lp_obj = solve_lp(build_rmp(pool, instance, w)).objective

    chosen = solve_final_integer(pool, instance)
    routes = columns_to_routes(chosen)
    sol = Solution(routes, 0.0, Status.FEASIBLE)
    obj = objective_value(instance, sol, w)
    if certified and abs(obj - lp_obj) <= BOUND_TOL:
        status = Status.OPTIMAL
    elif stop == "time":
        status = Status.TIMED_OUT
    else:
        status = Status.FEASIBLE
    return Solution(
        routes,
        obj,
        status,
        compute_time=elapsed(),
        bound=lp_obj if certified else None,
        method="colgen",
        lam=w.lam,
        meta={
            "trace": trace,
            "lp_bound": lp_obj,
            "stop": stop,
            "certified": certified,
            "pool_size": len(pool),
            "pricing_rounds": pool.pricing_rounds,
        },
    )
