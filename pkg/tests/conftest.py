import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from m3rs import DEFAULT_CATALOG, Fleet, GenSpec, Instance, Mode, Task, generate

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

D6, D4, D2, D1 = DEFAULT_CATALOG


def tiny_instance(seed: int, max_tasks: int = 6, max_agents: int = 2, max_modes: int = 3) -> tuple[Instance, float]:
    """Seeded oracle-scale instance plus a lambda drawn from a fixed menu.

    Horizons, capacities and window widths vary so that every constraint
    class binds somewhere in a batch.
    """
    r = np.random.default_rng(10_000 + seed)
    n = int(r.integers(1, max_tasks + 1))
    k = int(r.integers(1, max_agents + 1))
    nm = int(r.integers(1, max_modes + 1))
    cat = tuple(DEFAULT_CATALOG[j] for j in sorted(r.choice(4, nm, replace=False)))
    hours = float(r.choice([0.08, 0.15, 0.3, 0.6, 1.0]))
    cap = float(r.choice([6.0, 12.0, 100.0]))
    wide = float(r.choice([900.0, 3600.0]))
    spec = GenSpec(
        n, k, hours, seed=seed, mode_catalog=cat, capacity=cap,
        window_width_range=(max(m.service_time for m in cat), wide),
    )
    lam = float(r.choice([0.0, 0.1, 0.5, 0.8, 1.0]))
    return generate(spec), lam


def line_instance(tasks, count=1, horizon_hours=1.0, capacity=100.0, speed=0.5, rate=0.0, depot=(0.0, 0.0)):
    """Hand-built instance from (x, y, a, b, modes) tuples; ids are 0..n-1."""
    ts = tuple(Task(i, x, y, a, b, tuple(modes)) for i, (x, y, a, b, modes) in enumerate(tasks))
    fleet = Fleet(count, capacity, speed, rate, depot[0], depot[1])
    return Instance("hand", ts, fleet, horizon_hours)


@pytest.fixture
def desk20():
    return generate(GenSpec(20, 2, 0.86, seed=7))


MODE_FAST = Mode("fast", 40.0, 0.67, 0.167)
MODE_SLOW = Mode("slow", 240.0, 4.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
