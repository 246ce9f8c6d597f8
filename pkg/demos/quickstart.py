"""Generate a desk-scale instance, solve it with every method and compare the metrics.

Run with ``python3 demos/quickstart.py``; takes a few seconds.
"""

from m3rs import GenSpec, check_solution, generate
from m3rs.metrics import report, reports_to_csv, solve_method

inst = generate(GenSpec(12, 2, 0.86, seed=4))
print(f"{inst.name}: {inst.n_tasks} tasks, {inst.fleet.count} agents, horizon {inst.horizon:.0f}s")
rows = []
for method in ("exact", "colgen", "rsf-max", "rsf-min"):
    sol = solve_method(inst, method, 0.5, time_limit=60)
    assert check_solution(inst, sol).ok
    rows.append(report(inst, sol, method, 0.5))
print(reports_to_csv(rows), end="")
