"""Brute-force optimum for tiny instances.

Enumerates every ordered (task, mode) sequence a single agent can run, using
:func:`~m3rs.core.earliest_schedule` as the only feasibility test, keeps the
best route per covered task set, and then combines up to ``fleet.count``
disjoint task sets by exhaustive subset enumeration.  No bounding, so it is
slow but hard to get wrong.
"""

from __future__ import annotations

from .core import Instance, Route, Solution, Status, Weights, as_weights, earliest_schedule, objective_value

MAX_TASKS = 8


class TooLarge(ValueError):
    pass


def best_route_per_subset(instance: Instance, w: Weights) -> dict[int, tuple[float, Route]]:
    """Map bitmask of covered tasks -> (value, route) of the best single route."""
    tasks = instance.tasks
    best: dict[int, tuple[float, Route]] = {0: (0.0, Route(0))}

    def extend(seq, mask, value):
        for i, task in enumerate(tasks):
            if mask >> i & 1:
                continue
            for m, mode in enumerate(task.modes):
                cand = seq + [(task.id, m)]
                route = earliest_schedule(instance, cand)
                if not isinstance(route, Route):
                    continue
                v = value + w.visit_value(mode.quality)
                key = mask | 1 << i
                if key not in best or v > best[key][0]:
                    best[key] = (v, route)
                extend(cand, key, v)

    extend([], 0, 0.0)
    return best


def enumerate_optimal(instance: Instance, w: Weights | float) -> tuple[float, Solution]:
    w = as_weights(w)
    n = instance.n_tasks
    if n > MAX_TASKS:
        raise TooLarge(f"{n} tasks exceeds the oracle guard of {MAX_TASKS}")
    routes = best_route_per_subset(instance, w)

    full = (1 << n) - 1
    # value[k][U]: best total over at most k disjoint routes inside task set U
    prev = {U: (0.0, ()) for U in range(full + 1)}
    for _ in range(instance.fleet.count):
        cur = {}
        for U in range(full + 1):
            best = prev[U]
            S = U
            while S:
                if S in routes:
                    v = routes[S][0] + prev[U & ~S][0]
                    if v > best[0]:
                        best = (v, (S,) + prev[U & ~S][1])
                S = (S - 1) & U
            cur[U] = best
        prev = cur

    _, chosen = prev[full]
    out = []
    for k, S in enumerate(chosen):
        r = routes[S][1]
        out.append(Route(k, r.visits, r.return_time))
    sol = Solution(tuple(out), 0.0, Status.OPTIMAL, method="oracle", lam=w.lam)
    obj = objective_value(instance, sol, w)
    return obj, Solution(sol.routes, obj, Status.OPTIMAL, method="oracle", lam=w.lam)
