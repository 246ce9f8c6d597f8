"""Command-line front end: ``gen``, ``solve``, ``sweep`` and ``check``.

Exit codes: 0 success, 1 the solution violates a constraint, 2 usage or
parse errors.  Randomness comes only from ``--seed`` (default 0).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from .core import check_solution
from .instgen import GenSpec, InfeasibleSpec, generate, relax_start, with_agents
from .io import ParseError, dump_instance, dump_solution, load_instance, load_solution
from .metrics import METHODS, pareto_sweep, report, reports_to_csv, solve_method

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _lambda(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"lambda must lie in [0, 1], got {v}")
    return v


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list of lambdas."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if not step > 0 or stop < start:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            values = [round(start + i * step, 10) for i in range(count)]
            values = [v for v in values if v <= stop + 1e-9]
        else:
            values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; use start:stop:step or a comma list") from None
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError(f"grid values must lie in [0, 1]: {text!r}")
    return sorted(set(values))


def _methods(text: str) -> list[str]:
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if not out or bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad or text!r}; choose from {', '.join(METHODS)}")
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="m3rs", description="Multi-robot multi-mode routing and scheduling.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded random instance")
    g.add_argument("--tasks", type=_positive_int, required=True)
    g.add_argument("--agents", type=_positive_int, required=True)
    g.add_argument("--horizon-hours", type=_positive_float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--area-side", type=_positive_float, default=30.0)
    g.add_argument("--name", default=None)
    g.add_argument("-o", "--output", default="-", help="instance JSON path ('-' for stdout)")

    def variant_flags(q):
        q.add_argument("--relax-start", action="store_true", help="open every window at t=0")
        q.add_argument("--agents-override", type=_positive_int, default=None, metavar="N")

    s = sub.add_parser("solve", help="solve an instance and print its metric row")
    s.add_argument("-i", "--instance", required=True)
    s.add_argument("--method", choices=METHODS, default="exact")
    s.add_argument("--lambda", dest="lam", type=_lambda, default=0.5)
    s.add_argument("--time-limit", type=_positive_float, default=100.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", default=None, help="solution JSON path")
    s.add_argument("--trace", default=None, help="column-generation iteration trace CSV path")
    s.add_argument("--no-timing", action="store_true", help="write zero compute times (byte-stable output)")
    variant_flags(s)

    w = sub.add_parser("sweep", help="solve over a lambda grid and write CSV rows")
    w.add_argument("-i", "--instance", required=True)
    w.add_argument("--method", type=_methods, default=["exact"], help="method or comma list of methods")
    w.add_argument("--grid", type=parse_grid, default=parse_grid("0:1:0.1"))
    w.add_argument("--time-limit", type=_positive_float, default=100.0)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("-o", "--output", default="-")
    w.add_argument("--no-timing", action="store_true")
    w.add_argument("--variants-only", action="store_true", help="drop the unmodified instance rows")
    w.add_argument("--relax-start", action="store_true", help="add a variant with every window opened at t=0")
    w.add_argument(
        "--agents-override", type=_positive_int, action="append", default=[], metavar="N",
        help="add a variant flown by N agents (repeatable)",
    )

    c = sub.add_parser("check", help="validate a solution against an instance")
    c.add_argument("-i", "--instance", required=True)
    c.add_argument("-s", "--solution", required=True)
    return p


# --------------------------------------------------------------------------

def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from exc


def _load_instance(path: str):
    try:
        return load_instance(_read(path))
    except ParseError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _variant(instance, relax: bool, agents: int | None):
    if relax:
        instance = relax_start(instance)
    if agents is not None:
        instance = with_agents(instance, agents)
    return instance


def cmd_gen(args) -> int:
    try:
        spec = GenSpec(args.tasks, args.agents, args.horizon_hours, seed=args.seed, area_side=args.area_side, name=args.name)
        inst = generate(spec)
    except InfeasibleSpec as exc:
        raise UsageError(str(exc)) from exc
    _write(args.output, dump_instance(inst))
    return EXIT_OK


def _trace_csv(solution) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "pool_size", "rmp_objective", "best_reduced_cost", "full_round"])
    for row in solution.meta.get("trace", []):
        writer.writerow(
            [row["iteration"], row["pool_size"], repr(row["rmp_objective"]), repr(row["best_reduced_cost"]), int(row["full_round"])]
        )
    return buf.getvalue()


def cmd_solve(args) -> int:
    inst = _variant(_load_instance(args.instance), args.relax_start, args.agents_override)
    sol = solve_method(inst, args.method, args.lam, args.time_limit, args.seed)
    rep = check_solution(inst, sol)
    if not rep.ok:
        for v in rep.violations:
            print(v, file=sys.stderr)
        return EXIT_VIOLATION
    if args.output:
        _write(args.output, dump_solution(sol, inst, timing=not args.no_timing))
    if args.trace:
        _write(args.trace, _trace_csv(sol))
    sys.stdout.write(reports_to_csv([report(inst, sol, args.method, args.lam)], timing=not args.no_timing))
    return EXIT_OK


def sweep_workers(jobs: int) -> int:
    cap = os.environ.get("M3RS_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise UsageError(f"M3RS_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(n, jobs))


def cmd_sweep(args) -> int:
    base = _load_instance(args.instance)
    variants = [] if args.variants_only else [base]
    if args.relax_start:
        variants.append(relax_start(base))
    variants.extend(with_agents(base, k) for k in args.agents_override)
    if not variants:
        raise UsageError("--variants-only needs --relax-start or --agents-override")
    workers = sweep_workers(len(args.grid))
    rows = []
    for inst in variants:
        for method in args.method:
            rows.extend(pareto_sweep(inst, method, args.grid, args.time_limit, args.seed, workers))
    _write(args.output, reports_to_csv(rows, timing=not args.no_timing))
    return EXIT_OK


def cmd_check(args) -> int:
    inst = _load_instance(args.instance)
    try:
        sol = load_solution(_read(args.solution), inst)
    except ParseError as exc:
        raise UsageError(f"{args.solution}: {exc}") from exc
    rep = check_solution(inst, sol)
    if rep.ok:
        print("ok")
        return EXIT_OK
    for v in rep.violations:
        print(v)
    return EXIT_VIOLATION


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "sweep": cmd_sweep, "check": cmd_check}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"m3rs {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
