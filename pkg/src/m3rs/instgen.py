"""Seeded synthetic mission generator.

Tasks are desks scattered over a square floor; each gets a random subset of
the disinfection dose catalog and a time window somewhere in the mission.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import Fleet, Instance, Mode, Task

# Dose ~ log-reduction under first-order inactivation, so time, energy and
# quality all scale with log10 reduction (6, 4, 2, 1).
DEFAULT_CATALOG: tuple[Mode, ...] = (
    Mode("D_99.9999", 240.0, 4.0, 1.0),
    Mode("D_99.99", 160.0, 2.67, 0.667),
    Mode("D_99", 80.0, 1.33, 0.333),
    Mode("D_90", 40.0, 0.67, 0.167),
)

MAX_REDRAWS = 1000


class InfeasibleSpec(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    n_tasks: int
    n_agents: int
    horizon_hours: float
    seed: int = 0
    area_side: float = 30.0
    mode_catalog: tuple[Mode, ...] = DEFAULT_CATALOG
    window_width_range: tuple[float, float] = (300.0, 900.0)
    speed: float = 0.5
    capacity: float = 100.0
    travel_energy_rate: float = 0.02
    name: str | None = field(default=None)

    def __post_init__(self):
        if self.n_tasks < 1:
            raise InfeasibleSpec("n_tasks must be >= 1")
        if self.n_agents < 1:
            raise InfeasibleSpec("n_agents must be >= 1")
        if not self.horizon_hours > 0:
            raise InfeasibleSpec("horizon_hours must be > 0")
        if not self.mode_catalog:
            raise InfeasibleSpec("empty mode catalog")
        lo, hi = self.window_width_range
        if not 0 < lo <= hi:
            raise InfeasibleSpec("window width range must satisfy 0 < min <= max")
        if lo < max(m.service_time for m in self.mode_catalog):
            raise InfeasibleSpec("window widths must admit the longest catalog mode")
        if not 0 <= self.seed < 2**64:
            raise InfeasibleSpec("seed must be an unsigned 64-bit integer")


def instance_name(n_tasks: int, n_agents: int, horizon_hours: float) -> str:
    return f"{n_tasks}-{n_agents}-{horizon_hours:g}"


def generate(spec: GenSpec) -> Instance:
    rng = np.random.default_rng(spec.seed)
    horizon = spec.horizon_hours * 3600.0
    catalog = spec.mode_catalog
    n_modes = len(catalog)
    shortest = min(m.service_time for m in catalog)
    lo, hi = spec.window_width_range

    tasks = []
    for i in range(spec.n_tasks):
        x, y = rng.uniform(0.0, spec.area_side, size=2)
        # uniform over the non-empty subsets, encoded as a bitmask
        mask = int(rng.integers(1, 2**n_modes))
        modes = tuple(m for j, m in enumerate(catalog) if mask >> j & 1)
        for _ in range(MAX_REDRAWS):
            center = rng.uniform(0.0, horizon)
            width = rng.uniform(lo, hi)
            a = max(0.0, center - width / 2)
            b = min(horizon, center + width / 2)
            if any(a + m.service_time <= b for m in modes):
                break
        else:
            raise InfeasibleSpec(
                f"task {i}: no admissible window after {MAX_REDRAWS} draws "
                f"(horizon {horizon:.0f}s, shortest mode {shortest:.0f}s)"
            )
        tasks.append(Task(i, float(x), float(y), float(a), float(b), modes))

    half = spec.area_side / 2
    fleet = Fleet(
        count=spec.n_agents,
        capacity=spec.capacity,
        speed=spec.speed,
        travel_energy_rate=spec.travel_energy_rate,
        depot_x=half,
        depot_y=half,
    )
    name = spec.name or instance_name(spec.n_tasks, spec.n_agents, spec.horizon_hours)
    return Instance(name, tuple(tasks), fleet, spec.horizon_hours)


def relax_start(instance: Instance) -> Instance:
    """Same mission with every window opening at time 0."""
    tasks = tuple(replace(t, window_start=0.0) for t in instance.tasks)
    return replace(instance, name=f"{instance.name}/relax", tasks=tasks)


def with_agents(instance: Instance, count: int) -> Instance:
    """Same mission flown by ``count`` agents."""
    fleet = replace(instance.fleet, count=count)
    return replace(instance, name=f"{instance.name}/k{count}", fleet=fleet)
