"""Domain types, travel geometry and the feasibility/objective semantics.

Every solver in the package, and the validator, goes through the functions in
this module so that "feasible" means exactly one thing.  Times are seconds,
distances meters, energy in abstract battery units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Iterable, Sequence

import numpy as np

TOL = 1e-6

TaskId = Hashable
Point = tuple[float, float]


class InstanceError(ValueError):
    """Raised when a domain object violates its invariants."""


class UnknownTaskId(KeyError):
    pass


class DuplicateTask(ValueError):
    pass


class Status(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    TIMED_OUT = "TimedOut"

    @property
    def letter(self) -> str:
        # Report-table convention: a timed-out incumbent is still a feasible answer.
        return {"Optimal": "O", "Feasible": "F", "TimedOut": "F", "Infeasible": "I"}[self.value]


@dataclass(frozen=True)
class Mode:
    label: str
    service_time: float
    energy: float
    quality: float

    def __post_init__(self):
        if not self.service_time >= 0:
            raise InstanceError(f"mode {self.label}: service_time must be >= 0")
        if not self.energy >= 0:
            raise InstanceError(f"mode {self.label}: energy must be >= 0")
        if not 0 < self.quality <= 1:
            raise InstanceError(f"mode {self.label}: quality must lie in (0, 1]")


@dataclass(frozen=True)
class Task:
    id: TaskId
    x: float
    y: float
    window_start: float
    window_end: float
    modes: tuple[Mode, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise InstanceError(f"task {self.id!r}: empty mode set")
        if not 0 <= self.window_start < self.window_end:
            raise InstanceError(f"task {self.id!r}: need 0 <= window_start < window_end")
        if not any(self.window_start + m.service_time <= self.window_end + TOL for m in self.modes):
            raise InstanceError(f"task {self.id!r}: no mode fits inside the time window")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InstanceError(f"task {self.id!r}: non-finite coordinates")

    @property
    def pos(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class Fleet:
    count: int
    capacity: float
    speed: float
    travel_energy_rate: float = 0.0
    depot_x: float = 0.0
    depot_y: float = 0.0

    def __post_init__(self):
        if self.count < 1:
            raise InstanceError("fleet.count must be >= 1")
        if not self.capacity > 0:
            raise InstanceError("fleet.capacity must be > 0")
        if not self.speed > 0:
            raise InstanceError("fleet.speed must be > 0")
        if not self.travel_energy_rate >= 0:
            raise InstanceError("fleet.travel_energy_rate must be >= 0")

    @property
    def depot(self) -> Point:
        return (self.depot_x, self.depot_y)


@dataclass(frozen=True)
class Instance:
    """A mission: tasks, a homogeneous fleet and a horizon.

    The horizon is stored in hours (the unit instance names and files use) and
    exposed in seconds through :attr:`horizon`, so file round trips are exact.
    """

    name: str
    tasks: tuple[Task, ...]
    fleet: Fleet
    horizon_hours: float
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        if not self.horizon_hours > 0:
            raise InstanceError("horizon must be positive")
        index = {}
        for i, t in enumerate(self.tasks):
            if t.id in index:
                raise InstanceError(f"duplicate task id {t.id!r}")
            index[t.id] = i
            if t.window_end > self.horizon + TOL:
                raise InstanceError(f"task {t.id!r}: window ends after the horizon")
        if not (math.isfinite(self.fleet.depot_x) and math.isfinite(self.fleet.depot_y)):
            raise InstanceError("non-finite depot coordinates")
        object.__setattr__(self, "_index", index)

    @property
    def horizon(self) -> float:
        return self.horizon_hours * 3600.0

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def index(self, task_id: TaskId) -> int:
        try:
            return self._index[task_id]
        except (KeyError, TypeError):
            raise UnknownTaskId(task_id) from None

    def task(self, task_id: TaskId) -> Task:
        return self.tasks[self.index(task_id)]

    @property
    def max_quality(self) -> float:
        return max((m.quality for t in self.tasks for m in t.modes), default=1.0)


@dataclass(frozen=True)
class Visit:
    task_id: TaskId
    mode_index: int
    arrival: float


@dataclass(frozen=True)
class Route:
    agent: int
    visits: tuple[Visit, ...] = ()
    return_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(self.visits))


@dataclass(frozen=True)
class Solution:
    routes: tuple[Route, ...]
    objective: float
    status: Status
    compute_time: float = 0.0
    bound: float | None = None
    method: str = ""
    lam: float | None = None
    meta: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))
        object.__setattr__(self, "status", Status(self.status))

    @property
    def visits(self) -> list[Visit]:
        return [v for r in self.routes for v in r.visits]

    @property
    def visited_count(self) -> int:
        return sum(len(r.visits) for r in self.routes)


@dataclass(frozen=True)
class Weights:
    """Scalarization weight: ``lam`` on task count, ``1 - lam`` on quality."""

    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")

    @property
    def count_weight(self) -> float:
        return self.lam

    @property
    def quality_weight(self) -> float:
        return 1.0 - self.lam

    def visit_value(self, quality: float) -> float:
        return self.lam + (1.0 - self.lam) * quality


def as_weights(w: Weights | float) -> Weights:
    return w if isinstance(w, Weights) else Weights(float(w))


def empty_solution(status: Status = Status.FEASIBLE, **kw) -> Solution:
    return Solution(routes=(), objective=0.0, status=status, **kw)


# --------------------------------------------------------------------------
# geometry

def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def travel_time(instance: Instance, a: Point, b: Point) -> float:
    return distance(a, b) / instance.fleet.speed


def travel_energy(instance: Instance, a: Point, b: Point) -> float:
    return distance(a, b) * instance.fleet.travel_energy_rate


def location(instance: Instance, task_id: TaskId | None) -> Point:
    """Coordinates of a task, or of the depot when ``task_id`` is None."""
    if task_id is None:
        return instance.fleet.depot
    return instance.task(task_id).pos


def travel_matrices(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise travel time and energy; index ``n_tasks`` is the depot."""
    pts = np.array([t.pos for t in instance.tasks] + [instance.fleet.depot], dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    return dist / instance.fleet.speed, dist * instance.fleet.travel_energy_rate


# --------------------------------------------------------------------------
# scheduling and validation

@dataclass(frozen=True)
class ScheduleFailure:
    """Marker returned by :func:`earliest_schedule` for an infeasible sequence."""

    kind: str  # "window", "capacity" or "horizon"
    task_id: TaskId | None
    detail: str = ""


def earliest_schedule(
    instance: Instance,
    sequence: Iterable[tuple[TaskId, int]],
    agent: int = 0,
) -> Route | ScheduleFailure:
    """Schedule each (task, mode) as early as possible along the given order.

    Since the objective ignores arrival times and waiting is allowed, the
    sequence is feasible at all iff this earliest schedule is.
    """
    sequence = list(sequence)
    seen = set()
    for tid, _ in sequence:
        if tid in seen:
            raise DuplicateTask(tid)
        seen.add(tid)

    fleet = instance.fleet
    pos = fleet.depot
    t = 0.0
    energy = 0.0
    visits = []
    for tid, m in sequence:
        task = instance.task(tid)
        if not 0 <= m < len(task.modes):
            raise IndexError(f"mode index {m} out of range for task {tid!r}")
        mode = task.modes[m]
        arrival = max(task.window_start, t + travel_time(instance, pos, task.pos))
        finish = arrival + mode.service_time
        if finish > task.window_end + TOL:
            return ScheduleFailure("window", tid, f"completes at {finish:.3f} > {task.window_end:.3f}")
        energy += travel_energy(instance, pos, task.pos) + mode.energy
        if energy > fleet.capacity + TOL:
            return ScheduleFailure("capacity", tid, f"energy {energy:.3f} > {fleet.capacity:.3f}")
        visits.append(Visit(tid, m, arrival))
        pos, t = task.pos, finish

    if not visits:
        return Route(agent, (), 0.0)
    energy += travel_energy(instance, pos, fleet.depot)
    if energy > fleet.capacity + TOL:
        return ScheduleFailure("capacity", None, f"energy {energy:.3f} > {fleet.capacity:.3f}")
    ret = t + travel_time(instance, pos, fleet.depot)
    if ret > instance.horizon + TOL:
        return ScheduleFailure("horizon", None, f"returns at {ret:.3f} > {instance.horizon:.3f}")
    return Route(agent, tuple(visits), ret)


VIOLATION_NAMES = {
    "a": "assignment",
    "b": "mode",
    "c": "capacity",
    "d": "timing",
    "e": "window",
    "f": "horizon",
}


@dataclass(frozen=True)
class Violation:
    kind: str
    agent: int
    task_id: TaskId | None
    message: str

    def __str__(self):
        where = f"agent {self.agent}" + ("" if self.task_id is None else f", task {self.task_id!r}")
        return f"({self.kind}) {VIOLATION_NAMES[self.kind]}: {where}: {self.message}"


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violations: tuple[Violation, ...]

    @property
    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self):
        return self.ok


def check_solution(instance: Instance, solution: Solution) -> FeasibilityReport:
    """Validate a solution against every routing constraint.

    All violations are collected.  Unknown task ids raise
    :class:`UnknownTaskId`; a task appearing twice (in one route or across
    routes) is reported as an assignment violation.
    """
    fleet = instance.fleet
    out: list[Violation] = []
    seen: dict = {}
    agents_seen = set()

    if len(solution.routes) > fleet.count:
        out.append(Violation("a", -1, None, f"{len(solution.routes)} routes for {fleet.count} agents"))

    for route in solution.routes:
        k = route.agent
        if not 0 <= k < fleet.count or k in agents_seen:
            out.append(Violation("a", k, None, "invalid or repeated agent index"))
        agents_seen.add(k)
        if not route.visits:
            continue

        pos = fleet.depot
        ready = 0.0  # earliest moment the agent may arrive at the next stop
        energy = 0.0
        for v in route.visits:
            task = instance.task(v.task_id)
            if v.task_id in seen:
                out.append(Violation("a", k, v.task_id, f"task already serviced by agent {seen[v.task_id]}"))
            else:
                seen[v.task_id] = k

            if isinstance(v.mode_index, (int, np.integer)) and 0 <= v.mode_index < len(task.modes):
                mode = task.modes[v.mode_index]
                service, demand = mode.service_time, mode.energy
            else:
                out.append(Violation("b", k, v.task_id, f"mode index {v.mode_index!r} is not a single valid mode"))
                service, demand = 0.0, 0.0

            leg = travel_time(instance, pos, task.pos)
            if v.arrival < ready + leg - TOL:
                out.append(Violation("d", k, v.task_id, f"arrival {v.arrival:.3f} < earliest {ready + leg:.3f}"))
            if v.arrival < task.window_start - TOL:
                out.append(Violation("e", k, v.task_id, f"arrival {v.arrival:.3f} before window start {task.window_start:.3f}"))
            if v.arrival + service > task.window_end + TOL:
                out.append(Violation("e", k, v.task_id, f"completion {v.arrival + service:.3f} after window end {task.window_end:.3f}"))

            energy += travel_energy(instance, pos, task.pos) + demand
            ready = v.arrival + service
            pos = task.pos

        energy += travel_energy(instance, pos, fleet.depot)
        if energy > fleet.capacity + TOL:
            out.append(Violation("c", k, None, f"energy {energy:.3f} > capacity {fleet.capacity:.3f}"))
        earliest_return = ready + travel_time(instance, pos, fleet.depot)
        if route.return_time < earliest_return - TOL:
            out.append(Violation("f", k, None, f"return {route.return_time:.3f} < earliest {earliest_return:.3f}"))
        if route.return_time > instance.horizon + TOL:
            out.append(Violation("f", k, None, f"return {route.return_time:.3f} > horizon {instance.horizon:.3f}"))

    return FeasibilityReport(not out, tuple(out))


class InfeasibleSolution(ValueError):
    def __init__(self, report: FeasibilityReport):
        super().__init__("; ".join(map(str, report.violations)))
        self.report = report


def quality_sum(instance: Instance, solution: Solution) -> float:
    return math.fsum(instance.task(v.task_id).modes[v.mode_index].quality for v in solution.visits)


def objective_value(
    instance: Instance, solution: Solution, w: Weights | float, check: bool = False
) -> float:
    """Weighted task count plus weighted quality sum; arrival times are irrelevant."""
    w = as_weights(w)
    if check:
        report = check_solution(instance, solution)
        if not report.ok:
            raise InfeasibleSolution(report)
    return w.count_weight * solution.visited_count + w.quality_weight * quality_sum(instance, solution)


def routes_objective(instance: Instance, routes: Sequence[Route], w: Weights | float) -> float:
    sol = Solution(tuple(routes), 0.0, Status.FEASIBLE)
    return objective_value(instance, sol, w)
