"""Exact branch-and-bound over route construction.

The same search serves three callers: the full multi-agent solve, the
fixed-mode baselines (via :func:`restrict_modes`), and single-agent pricing
for column generation, where each visit's value is reduced by a dual price.

Routes are built one agent at a time, one (task, mode) extension at a time,
always scheduling as early as possible.  Nodes are pruned with

* an optimistic bound: a fractional knapsack over the remaining agents' time,
  with nested deadline constraints and each task's (time, value) mode curve
  replaced by its concave envelope;
* state dominance: two partial solutions with the same assigned task set,
  current agent and position, where one is no later, uses no more energy and
  is worth at least as much.
"""

from __future__ import annotations

import hashlib
import heapq
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    TOL,
    Instance,
    Route,
    Solution,
    Status,
    TaskId,
    Visit,
    Weights,
    as_weights,
    earliest_schedule,
    objective_value,
    travel_matrices,
)

EPS = 1e-9
# At lambda == 1 every visit is worth 1 regardless of mode; shading the weight
# by this much breaks ties toward higher quality without changing the count.
TIE_SHADE = 1e-6


@dataclass(frozen=True)
class SolveLimits:
    max_time: float = 60.0
    max_nodes: int | None = None

    def __post_init__(self):
        if not self.max_time > 0:
            raise ValueError("max_time must be > 0")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ValueError("max_nodes must be positive")


@dataclass(frozen=True)
class Column:
    """One single-agent schedule, as used by the restricted master problem."""

    visits: tuple[Visit, ...]
    coverage: tuple[int, ...]
    cost: float
    id: str
    return_time: float = 0.0

    @property
    def task_ids(self) -> tuple[TaskId, ...]:
        return tuple(v.task_id for v in self.visits)

    def reduced_cost(self, duals: Sequence[float], fleet_dual: float = 0.0) -> float:
        return self.cost - float(np.dot(self.coverage, duals)) - fleet_dual


def column_id(pairs) -> str:
    key = repr(sorted((repr(t), m) for t, m in pairs))
    return hashlib.sha1(key.encode()).hexdigest()[:16]


def make_column(instance: Instance, route: Route, w: Weights | float) -> Column:
    w = as_weights(w)
    cover = [0] * instance.n_tasks
    for v in route.visits:
        cover[instance.index(v.task_id)] = 1
    cost = sum(w.visit_value(instance.task(v.task_id).modes[v.mode_index].quality) for v in route.visits)
    return Column(
        visits=route.visits,
        coverage=tuple(cover),
        cost=cost,
        id=column_id((v.task_id, v.mode_index) for v in route.visits),
        return_time=route.return_time,
    )


class ColumnList(list):
    """Pricing output; ``exhausted`` is False when a limit cut the search short."""

    exhausted: bool = True


def _fitting(task) -> list:
    """Modes whose service fits inside the task's window; the rest are unusable."""
    return [m for m in task.modes if task.window_start + m.service_time <= task.window_end + TOL]


def restrict_modes(instance: Instance, policy: str) -> Instance:
    """Keep only each task's highest- (``max``) or lowest-quality (``min``) usable mode."""
    from dataclasses import replace

    if policy not in ("max", "min"):
        raise ValueError(f"unknown policy {policy!r}")
    tasks = []
    for t in instance.tasks:
        usable = _fitting(t)
        qs = [m.quality for m in usable]
        target = max(qs) if policy == "max" else min(qs)
        keep = next(m for m in usable if m.quality == target)
        tasks.append(replace(t, modes=(keep,)))
    return replace(instance, tasks=tuple(tasks))


def strongest_only(instance: Instance) -> Instance:
    """Keep only modes at the instance's top quality; tasks without one are dropped.

    This is the fixed-mode "max dose" baseline: a task that cannot take the
    strongest dose, or whose window is too short for it, is not served at all.
    """
    from dataclasses import replace

    top = instance.max_quality
    tasks = []
    for t in instance.tasks:
        modes = tuple(m for m in _fitting(t) if m.quality == top)
        if modes:
            tasks.append(replace(t, modes=modes[:1]))
    return replace(instance, tasks=tuple(tasks))


def _envelope(points):
    """Concave envelope through the origin of (time, value) points.

    Returns the envelope's segments as (slope, length) with decreasing slope.
    """
    pts = sorted(points)
    segs = []
    x0 = y0 = 0.0
    while True:
        best = None
        for x, y in pts:
            if x > x0 + 1e-12 and y > y0 + 1e-15:
                s = (y - y0) / (x - x0)
                if best is None or s > best[0] + 1e-15 or (abs(s - best[0]) <= 1e-15 and x > best[1]):
                    best = (s, x, y)
        if best is None:
            return segs
        s, x, y = best
        segs.append((s, x - x0))
        x0, y0 = x, y


class _RouteSearch:
    """Depth-first search that grows all agents' routes together.

    At every node the open agent with the earliest clock is extended (or
    closed), so each multi-route solution is generated exactly once and the
    bound sees every agent's current time.
    """

    def __init__(
        self,
        instance: Instance,
        options: Mapping[int, list[tuple[int, float, float, float]]],
        n_agents: int,
        limits: SolveLimits,
        collect: int = 0,
        threshold: float = 0.0,
        dominance: bool = True,
    ):
        self.K = n_agents
        self.limits = limits
        self.collect = collect
        self.threshold = threshold
        self.dominance = dominance

        tt, te = travel_matrices(instance)
        D = instance.n_tasks
        H = instance.horizon
        Q = instance.fleet.capacity
        self.D, self.Q = D, Q
        self.tt = tt.tolist()
        self.te = te.tolist()

        # keep only modes that are feasible as a lone visit from the depot
        self.a, self.deadline, self.ret_e, self.opts = {}, {}, {}, {}
        for i, modes in options.items():
            task = instance.tasks[i]
            dl = min(task.window_end, H - self.tt[i][D])
            arr = max(task.window_start, self.tt[D][i])
            base_e = self.te[D][i] + self.te[i][D]
            ok = [
                (m, s, d, v) for (m, s, d, v) in modes
                if v > EPS and arr + s <= dl + TOL and base_e + d <= Q + TOL
            ]
            if ok:
                ok.sort(key=lambda o: (-o[3], o[1], o[0]))
                self.opts[i] = ok
                self.a[i] = task.window_start
                self.deadline[i] = dl
                self.ret_e[i] = self.te[i][D]
        self.cands = sorted(self.opts)
        self.bit = {i: 1 << p for p, i in enumerate(self.cands)}
        self._env_cache: dict = {}
        self.tt_col = [list(c) for c in zip(*self.tt)]

        # per-agent state, mutated in place during the search
        self.loc = [D] * n_agents
        self.t = [0.0] * n_agents
        self.e = [0.0] * n_agents
        self.open = [True] * n_agents
        self.first = [-1] * n_agents

        self.nodes = 0
        self.exhausted = True
        self.timed_out = False
        self.best = threshold
        self.best_path: list | None = None
        self.heap: list = []  # (value, tiebreak, key, path) when collecting
        self._heap_keys: set = set()
        self._counter = 0
        self.memo: dict = {}

    # -- bounding -----------------------------------------------------------

    def _segments(self, i, modes_mask, lead):
        # lead: lower bound on the travel time spent reaching task i
        key = (i, modes_mask, lead)
        segs = self._env_cache.get(key)
        if segs is None:
            pts = [(max(s + lead, 1e-12), v) for p, (m, s, d, v) in enumerate(self.opts[i]) if modes_mask >> p & 1]
            segs = _envelope(pts)
            self._env_cache[key] = segs
        return segs

    def _feasible_modes(self, k, mask):
        """Tasks agent ``k`` can take next, with the bitmask of usable modes."""
        loc, t, e = self.loc[k], self.t[k], self.e[k]
        tt_loc, te_loc = self.tt[loc], self.te[loc]
        Q = self.Q + TOL
        out = {}
        for i in self.cands:
            if mask & self.bit[i]:
                continue
            arr = t + tt_loc[i]
            if arr < self.a[i]:
                arr = self.a[i]
            room = self.deadline[i] - arr + TOL
            if room < 0:
                continue
            e0 = e + te_loc[i] + self.ret_e[i]
            mm = 0
            for p, o in enumerate(self.opts[i]):
                if o[1] <= room and e0 + o[2] <= Q:
                    mm |= 1 << p
            if mm:
                out[i] = (mm, arr)
        return out

    def _bound(self, reach, opened):
        """Optimistic value of everything still reachable by an open agent."""
        items = []
        locs = [self.loc[k] for k in opened]
        for i, mm in reach.items():
            # a task is entered from an agent's position or another live task
            tt_col = self.tt_col[i]
            lead = min(tt_col[l] for l in locs)
            for j in reach:
                if j != i and tt_col[j] < lead:
                    lead = tt_col[j]
            dl = self.deadline[i]
            for slope, length in self._segments(i, mm, lead):
                items.append((slope, length, dl))
        if not items:
            return 0.0
        items.sort(key=lambda it: -it[0])
        dls = sorted({it[2] for it in items})
        pos = {d: p for p, d in enumerate(dls)}
        ts = [self.t[k] for k in opened]
        slack = [sum(max(0.0, d - t + TOL) for t in ts) for d in dls]
        total = 0.0
        nd = len(dls)
        for slope, length, dl in items:
            p = pos[dl]
            room = min(slack[p:])
            if room <= 0.0:
                continue
            take = length if length < room else room
            total += take * slope
            for q in range(p, nd):
                slack[q] -= take
        return total

    # -- bookkeeping ----------------------------------------------------------

    def _cutoff(self):
        if self.collect:
            if len(self.heap) >= self.collect:
                return max(self.threshold, self.heap[0][0])
            return self.threshold
        return self.best

    def _record(self, val, path):
        if self.collect:
            if val <= self.threshold + EPS:
                return
            key = frozenset((i, p) for _, i, p in path)
            if key in self._heap_keys:
                return
            self._counter += 1
            entry = (val, -self._counter, key, list(path))
            if len(self.heap) < self.collect:
                heapq.heappush(self.heap, entry)
                self._heap_keys.add(key)
            elif val > self.heap[0][0] + EPS:
                old = heapq.heapreplace(self.heap, entry)
                self._heap_keys.discard(old[2])
                self._heap_keys.add(key)
        elif val > self.best + EPS:
            self.best = val
            self.best_path = list(path)

    def _dominated(self, live, opened, val):
        agents = sorted((self.loc[k], self.t[k], self.e[k], self.first[k] < 0) for k in opened)
        unused = sum(1 for a in agents if a[3])
        last_first = max(self.first) if unused else -1
        key = (live, tuple(a[0] for a in agents), unused, last_first)
        ts = tuple(a[1] for a in agents)
        es = tuple(a[2] for a in agents)
        entries = self.memo.get(key)
        if entries is None:
            self.memo[key] = [(ts, es, val)]
            return False
        for ts2, es2, v2 in entries:
            if v2 >= val - 1e-12 and all(x <= y + 1e-9 for x, y in zip(ts2, ts)) \
                    and all(x <= y + 1e-9 for x, y in zip(es2, es)):
                return True
        entries[:] = [
            x for x in entries
            if not (val >= x[2] and all(a <= b for a, b in zip(ts, x[0])) and all(a <= b for a, b in zip(es, x[1])))
        ]
        entries.append((ts, es, val))
        return False

    # -- search -------------------------------------------------------------

    def run(self, greedy_first: bool = True):
        self.deadline_time = time.perf_counter() + self.limits.max_time
        if greedy_first and not self.collect:
            self._greedy()
        try:
            self._dfs(0, 0.0, [])
        except _Stop:
            self.exhausted = False
        return self

    def _pick(self):
        k_best = -1
        for k in range(self.K):
            if self.open[k] and (k_best < 0 or self.t[k] < self.t[k_best]):
                k_best = k
        return k_best

    def _greedy(self):
        """Quick incumbent: extend the earliest agent with the best value rate."""
        saved = (self.loc[:], self.t[:], self.e[:], self.open[:])
        mask, val, path = 0, 0.0, []
        while True:
            k = self._pick()
            if k < 0:
                break
            reach = self._feasible_modes(k, mask)
            best = None
            for i, (mm, arr) in reach.items():
                for p, (m, s, d, v) in enumerate(self.opts[i]):
                    if mm >> p & 1:
                        key = (v / (arr + s - self.t[k] + 1.0), -i, -p)
                        if best is None or key > best[0]:
                            best = (key, i, p, arr + s, d)
            if best is None:
                self.open[k] = False
                continue
            _, i, p, fin, d = best
            self.e[k] += self.te[self.loc[k]][i] + d
            self.loc[k], self.t[k] = i, fin
            mask |= self.bit[i]
            val += self.opts[i][p][3]
            path.append((k, i, self.opts[i][p][0]))
        self.loc, self.t, self.e, self.open = (list(x) for x in saved)
        self._record(val, path)

    def _dfs(self, mask, val, path):
        self.nodes += 1
        if self.nodes & 255 == 0 and time.perf_counter() > self.deadline_time:
            self.timed_out = True
            raise _Stop
        if self.limits.max_nodes is not None and self.nodes > self.limits.max_nodes:
            raise _Stop

        self._record(val, path)
        k = self._pick()
        if k < 0:
            return
        opened = [j for j in range(self.K) if self.open[j]]

        reach = {}
        mine = None
        for j in opened:
            fm = self._feasible_modes(j, mask)
            if j == k:
                mine = fm
            for i, (mm, _) in fm.items():
                reach[i] = reach.get(i, 0) | mm
        if not reach:
            return
        # tasks no open agent can still reach are irrelevant to the future
        live = 0
        for i in reach:
            live |= self.bit[i]
        if self.dominance and self._dominated(live, opened, val):
            return
        if val + self._bound(reach, opened) <= self._cutoff() + EPS:
            return

        unused = self.first[k] < 0
        floor = max((self.first[j] for j in range(k)), default=-1) if unused else -1
        if unused and k > 0 and self.first[k - 1] < 0:
            floor = None  # an earlier identical agent stayed home; so must this one
        kids = []
        if floor is not None:
            t0 = self.t[k]
            for i, (mm, arr) in mine.items():
                if i <= floor:
                    continue
                for p, (m, s, d, v) in enumerate(self.opts[i]):
                    if mm >> p & 1:
                        kids.append((-v / (arr + s - t0 + 1.0), i, p, arr + s, d, v))
            kids.sort()

        loc, t, e = self.loc[k], self.t[k], self.e[k]
        for _, i, p, fin, d, v in kids:
            self.loc[k], self.t[k], self.e[k] = i, fin, e + self.te[loc][i] + d
            if unused:
                self.first[k] = i
            path.append((k, i, self.opts[i][p][0]))
            self._dfs(mask | self.bit[i], val + v, path)
            path.pop()
        self.loc[k], self.t[k], self.e[k] = loc, t, e
        if unused:
            self.first[k] = -1

        # close this agent (an unused one takes every later unused agent with it)
        closing = [j for j in range(k, self.K) if self.open[j] and self.first[j] < 0] if unused else [k]
        for j in closing:
            self.open[j] = False
        self._dfs(mask, val, path)
        for j in closing:
            self.open[j] = True

    def root_bound(self):
        opened = list(range(self.K))
        reach = {}
        for j in opened:
            for i, (mm, _) in self._feasible_modes(j, 0).items():
                reach[i] = reach.get(i, 0) | mm
        return self._bound(reach, opened)

    def results(self):
        """Collected paths, best first."""
        return [(v, path) for v, _, _, path in sorted(self.heap, key=lambda h: (-h[0], -h[1]))]


class _Stop(Exception):
    pass


def _mode_options(instance: Instance, w: Weights, task_indices, price=None):
    opts = {}
    for i in task_indices:
        task = instance.tasks[i]
        g = 0.0 if price is None else price[i]
        opts[i] = [
            (m, mode.service_time, mode.energy, w.visit_value(mode.quality) - g)
            for m, mode in enumerate(task.modes)
        ]
    return opts


def _routes_from_path(instance: Instance, path, n_agents):
    seqs = [[] for _ in range(n_agents)]
    for k, i, m in path:
        seqs[k].append((instance.tasks[i].id, m))
    routes = []
    for k, seq in enumerate(seqs):
        if not seq:
            continue
        r = earliest_schedule(instance, seq, agent=len(routes))
        if not isinstance(r, Route):
            raise AssertionError(f"search produced an infeasible route: {r}")
        routes.append(r)
    return routes


def solve_exact(
    instance: Instance,
    w: Weights | float,
    limits: SolveLimits | None = None,
) -> Solution:
    """Maximize the weighted count/quality objective over all fleets of routes.

    Status is ``Optimal`` when the search tree was exhausted, ``TimedOut`` when
    the time limit stopped it and ``Feasible`` when the node limit did; in the
    last two cases ``bound`` holds a valid upper bound.
    """
    w = as_weights(w)
    limits = limits or SolveLimits()
    start = time.perf_counter()
    search_w = Weights(1.0 - TIE_SHADE) if w.lam == 1.0 else w
    n = instance.n_tasks
    search = _RouteSearch(
        instance,
        _mode_options(instance, search_w, range(n)),
        instance.fleet.count,
        limits,
    ).run()

    routes = _routes_from_path(instance, search.best_path or [], instance.fleet.count)
    sol = Solution(routes, 0.0, Status.FEASIBLE)
    obj = objective_value(instance, sol, w)
    if search.exhausted:
        status, bound = Status.OPTIMAL, obj
    else:
        status = Status.TIMED_OUT if search.timed_out else Status.FEASIBLE
        probe = _RouteSearch(instance, _mode_options(instance, w, range(n)), instance.fleet.count, limits)
        bound = max(obj, probe.root_bound())
    return Solution(
        routes,
        obj,
        status,
        compute_time=time.perf_counter() - start,
        bound=bound,
        method="exact",
        lam=w.lam,
        meta={"nodes": search.nodes},
    )


def solve_pricing(
    instance: Instance,
    subset,
    duals,
    w: Weights | float,
    limits: SolveLimits | None = None,
    pool_cap: int = 20,
    fleet_dual: float = 0.0,
) -> ColumnList:
    """Single-agent columns with positive reduced cost over ``subset``.

    ``duals`` holds one non-negative price per instance task (a sequence in
    instance order, or a mapping keyed by task id).  A column's reduced cost
    is its objective value minus the prices of the tasks it covers minus
    ``fleet_dual``.  Up to ``pool_cap`` distinct columns are returned, best
    first.
    """
    w = as_weights(w)
    limits = limits or SolveLimits()
    if pool_cap < 1:
        raise ValueError("pool_cap must be positive")
    n = instance.n_tasks
    if isinstance(duals, Mapping):
        price = [float(duals.get(t.id, 0.0)) for t in instance.tasks]
    else:
        price = [float(x) for x in duals]
        if len(price) != n:
            raise ValueError("duals must have one entry per task")
    if any(g < -1e-9 for g in price):
        raise ValueError("dual prices must be non-negative")
    price = [max(0.0, g) for g in price]
    idx = sorted({instance.index(t) for t in subset})

    # no tie shading here: with continuous prices it could hide a barely
    # positive column and void the convergence certificate
    search = _RouteSearch(
        instance,
        _mode_options(instance, w, idx, price),
        1,
        limits,
        collect=pool_cap,
        threshold=max(0.0, fleet_dual) + EPS,
    ).run()

    out = ColumnList()
    for _, path in search.results():
        route = _routes_from_path(instance, path, 1)[0]
        col = make_column(instance, route, w)
        if col.reduced_cost(price, fleet_dual) > EPS:
            out.append(col)
    out.sort(key=lambda c: -c.reduced_cost(price, fleet_dual))
    out.exhausted = search.exhausted
    return out
