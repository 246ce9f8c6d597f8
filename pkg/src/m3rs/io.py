"""JSON files for instances and solutions.

Instance files keep the horizon in hours and windows in seconds.  Solution
files name modes by label; labels are resolved against the instance on load.
Floats are written with ``repr`` precision so ``load(dump(x)) == x``.
"""

from __future__ import annotations

import json
from typing import Any

from .core import Fleet, Instance, InstanceError, Mode, Route, Solution, Status, Task, Visit


class ParseError(ValueError):
    """Malformed or schema-violating file content."""


def _req(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    if key not in obj:
        raise ParseError(f"{where}: missing key {key!r}")
    return obj[key]


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _pair(x, where: str) -> tuple[float, float]:
    if not isinstance(x, list) or len(x) != 2:
        raise ParseError(f"{where}: expected a [x, y] pair")
    return _num(x[0], where), _num(x[1], where)


def _task_id(x, where: str):
    if isinstance(x, bool) or not isinstance(x, (int, str)):
        raise ParseError(f"{where}: task id must be an integer or a string")
    return x


# --------------------------------------------------------------------------
# instances

def instance_to_dict(instance: Instance) -> dict:
    f = instance.fleet
    return {
        "name": instance.name,
        "horizon_hours": instance.horizon_hours,
        "fleet": {
            "count": f.count,
            "capacity": f.capacity,
            "speed": f.speed,
            "travel_energy_rate": f.travel_energy_rate,
            "depot": [f.depot_x, f.depot_y],
        },
        "tasks": [
            {
                "id": t.id,
                "pos": [t.x, t.y],
                "window_s": [t.window_start, t.window_end],
                "modes": [
                    {"label": m.label, "service_s": m.service_time, "energy": m.energy, "quality": m.quality}
                    for m in t.modes
                ],
            }
            for t in instance.tasks
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    try:
        fd = _req(data, "fleet", "instance")
        count = _req(fd, "count", "fleet")
        if isinstance(count, bool) or not isinstance(count, int):
            raise ParseError("fleet.count must be an integer")
        dx, dy = _pair(_req(fd, "depot", "fleet"), "fleet.depot")
        fleet = Fleet(
            count=count,
            capacity=_num(_req(fd, "capacity", "fleet"), "fleet.capacity"),
            speed=_num(_req(fd, "speed", "fleet"), "fleet.speed"),
            travel_energy_rate=_num(_req(fd, "travel_energy_rate", "fleet"), "fleet.travel_energy_rate"),
            depot_x=dx,
            depot_y=dy,
        )
        raw_tasks = _req(data, "tasks", "instance")
        if not isinstance(raw_tasks, list):
            raise ParseError("instance.tasks must be a list")
        tasks = []
        for n, td in enumerate(raw_tasks):
            where = f"tasks[{n}]"
            tid = _task_id(_req(td, "id", where), where)
            x, y = _pair(_req(td, "pos", where), f"{where}.pos")
            a, b = _pair(_req(td, "window_s", where), f"{where}.window_s")
            raw_modes = _req(td, "modes", where)
            if not isinstance(raw_modes, list):
                raise ParseError(f"{where}.modes must be a list")
            modes = []
            for j, md in enumerate(raw_modes):
                mw = f"{where}.modes[{j}]"
                label = _req(md, "label", mw)
                if not isinstance(label, str):
                    raise ParseError(f"{mw}.label must be a string")
                modes.append(
                    Mode(
                        label,
                        _num(_req(md, "service_s", mw), f"{mw}.service_s"),
                        _num(_req(md, "energy", mw), f"{mw}.energy"),
                        _num(_req(md, "quality", mw), f"{mw}.quality"),
                    )
                )
            if len({m.label for m in modes}) != len(modes):
                raise ParseError(f"{where}: mode labels must be unique within a task")
            tasks.append(Task(tid, x, y, a, b, tuple(modes)))
        name = _req(data, "name", "instance")
        if not isinstance(name, str):
            raise ParseError("instance.name must be a string")
        hours = _num(_req(data, "horizon_hours", "instance"), "horizon_hours")
        return Instance(name, tuple(tasks), fleet, hours)
    except InstanceError as exc:
        raise ParseError(str(exc)) from exc


# --------------------------------------------------------------------------
# solutions

def solution_to_dict(solution: Solution, instance: Instance, timing: bool = True) -> dict:
    routes = []
    for r in solution.routes:
        visits = []
        for v in r.visits:
            modes = instance.task(v.task_id).modes
            label = modes[v.mode_index].label if 0 <= v.mode_index < len(modes) else None
            visits.append({"task": v.task_id, "mode_label": label, "arrival_s": v.arrival})
        routes.append({"agent": r.agent, "visits": visits, "return_s": r.return_time})
    return {
        "instance": instance.name,
        "lambda": solution.lam,
        "method": solution.method,
        "status": solution.status.value,
        "objective": solution.objective,
        "upper_bound": solution.bound,
        "compute_time_s": solution.compute_time if timing else 0.0,
        "routes": routes,
    }


def solution_from_dict(data: dict, instance: Instance) -> Solution:
    """Rebuild a solution; labels the task does not offer map to mode index -1."""
    try:
        status = Status(_req(data, "status", "solution"))
    except ValueError as exc:
        raise ParseError(f"solution.status: {exc}") from exc
    lam = data.get("lambda")
    if lam is not None:
        lam = _num(lam, "solution.lambda")
    bound = data.get("upper_bound")
    if bound is not None:
        bound = _num(bound, "solution.upper_bound")
    raw_routes = _req(data, "routes", "solution")
    if not isinstance(raw_routes, list):
        raise ParseError("solution.routes must be a list")
    routes = []
    for n, rd in enumerate(raw_routes):
        where = f"routes[{n}]"
        agent = _req(rd, "agent", where)
        if isinstance(agent, bool) or not isinstance(agent, int):
            raise ParseError(f"{where}.agent must be an integer")
        raw_visits = _req(rd, "visits", where)
        if not isinstance(raw_visits, list):
            raise ParseError(f"{where}.visits must be a list")
        visits = []
        for j, vd in enumerate(raw_visits):
            vw = f"{where}.visits[{j}]"
            tid = _task_id(_req(vd, "task", vw), vw)
            label = _req(vd, "mode_label", vw)
            m = -1
            if tid in instance._index:
                labels = [md.label for md in instance.task(tid).modes]
                if label in labels:
                    m = labels.index(label)
            visits.append(Visit(tid, m, _num(_req(vd, "arrival_s", vw), f"{vw}.arrival_s")))
        routes.append(Route(agent, tuple(visits), _num(_req(rd, "return_s", where), f"{where}.return_s")))
    method = data.get("method", "")
    return Solution(
        tuple(routes),
        _num(_req(data, "objective", "solution"), "solution.objective"),
        status,
        compute_time=_num(data.get("compute_time_s", 0.0), "solution.compute_time_s"),
        bound=bound,
        method=method if isinstance(method, str) else "",
        lam=lam,
    )


# --------------------------------------------------------------------------
# text helpers

def dumps(data: dict) -> str:
    return json.dumps(data, indent=2, allow_nan=False) + "\n"


def loads(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("top level must be a JSON object")
    return data


def dump_instance(instance: Instance) -> str:
    return dumps(instance_to_dict(instance))


def load_instance(text: str) -> Instance:
    return instance_from_dict(loads(text))


def dump_solution(solution: Solution, instance: Instance, timing: bool = True) -> str:
    return dumps(solution_to_dict(solution, instance, timing))


def load_solution(text: str, instance: Instance) -> Solution:
    return solution_from_dict(loads(text), instance)
