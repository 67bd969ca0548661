"""Command-line front end.

Exit codes: 0 success, 1 a constraint check failed (``validate``), 2 usage or
input error. Human-readable text goes to stdout, data goes to files.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bench import (
    aggregate, emit_plot_data, load_plan, read_records, run_sweep, trend_checks,
)
from .bench import solve_instance
from .clustering import METHODS as CLUSTERING_METHODS
from .clustering import AdpcParams, format_clusters
from .errors import InsufficientData, SarcovError
from .model import (
    EnergyModel, Solution, build_route, check_energy, check_per_target, check_uniqueness,
    compute_metrics, format_metrics, load_solution, route_energy, save_solution, viewpoint_positions,
)
from .routing import SOLVERS, SolverConfig
from .scenario import generate_viewpoints, load_scenario, random_scenario, save_scenario

RUN_DIR_ENV = "SARCOV_RUN_DIR"
EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("sarcov")


class UsageError(Exception):
    """Bad input detected by a command after argument parsing."""


def run_dir() -> Path:
    return Path(os.environ.get(RUN_DIR_ENV, "runs"))


def _mode(args) -> str:
    return "2d" if args.distance_2d else "3d"


def _energy(args) -> EnergyModel:
    return EnergyModel(args.e_flight, args.e_image, args.e_max)


def _add_energy_flags(p):
    d = EnergyModel()
    p.add_argument("--e-flight", type=float, default=d.e_flight, help="energy per meter flown")
    p.add_argument("--e-image", type=float, default=d.e_image, help="energy per viewpoint imaged")
    p.add_argument("--e-max", type=float, default=d.e_max, help="per-UAV energy budget")


# -- commands ------------------------------------------------------------------

def cmd_generate(args) -> int:
    scenario = random_scenario(args.m, args.area, args.h, args.theta, args.k, args.seed)
    out = Path(args.out) if args.out else run_dir() / f"scenario_seed{args.seed}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scenario(scenario, out)
    print(f"{scenario.viewpoint_count} viewpoints")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario = load_scenario(args.scenario)
    energy = _energy(args)
    adpc = AdpcParams(xi=args.xi, d_c_percentile=args.d_c_percentile, distance_mode=_mode(args))
    config = SolverConfig(max_iterations=args.iterations, population_size=args.population, seed=args.seed)
    solution, clustering, t_cluster, t_solve = solve_instance(
        scenario, args.n, args.clustering, args.solver, energy, adpc, config
    )
    out = Path(args.out) if args.out else run_dir() / f"solution_{args.clustering}_{args.solver}_seed{args.seed}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_solution(solution, out)
    if args.clusters:
        refs = [v.ref for v in generate_viewpoints(scenario)]
        Path(args.clusters).write_text(format_clusters(clustering, refs), encoding="utf-8")
    metrics = compute_metrics(solution, scenario, energy)
    sys.stdout.write(format_metrics(metrics))
    log.info("clustering %.6fs, routing %.6fs", t_cluster, t_solve)
    print(f"wrote {out}")
    return EXIT_OK


def _recomputed(solution: Solution, scenario, mode) -> Solution:
    """Same visit orders with distances measured from the scenario geometry."""
    positions = viewpoint_positions(scenario)
    unknown = sorted({ref for r in solution.routes for ref in r.visit_order} - positions.keys())
    unknown += sorted(set(solution.dropped) - positions.keys())
    if unknown:
        raise UsageError("solution references viewpoints absent from the scenario: "
                         + ", ".join(f"{m}:{k}" for m, k in unknown))
    routes = []
    for r in solution.routes:
        fresh = build_route(r.uav_id, r.visit_order, positions, mode)
        if not math.isclose(fresh.total_distance, r.total_distance, rel_tol=1e-9, abs_tol=1e-6):
            print(f"note: route {r.uav_id} records d={r.total_distance!r}, geometry gives {fresh.total_distance!r}")
        routes.append(fresh)
    return Solution(routes, solution.dropped)


def cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    energy = _energy(args)
    solution = _recomputed(load_solution(args.solution), scenario, _mode(args))

    flags = check_energy(solution, energy)
    over = [f"{r.uav_id}:{route_energy(r, energy):.6g}" for r, ok in zip(solution.routes, flags) if not ok]
    peak = max((route_energy(r, energy) for r in solution.routes), default=0.0)
    energy_ok = all(flags)
    detail = f"max route energy {peak:.6g} <= {energy.e_max:.6g}" if energy_ok else f"over budget: {', '.join(over)}"
    print(f"energy: {'PASS' if energy_ok else 'FAIL'} ({detail})")

    unique_ok, offenders = check_uniqueness(solution)
    detail = "no viewpoint visited twice" if unique_ok else "repeated: " + ", ".join(f"{m}:{k}" for m, k in sorted(offenders))
    print(f"uniqueness: {'PASS' if unique_ok else 'FAIL'} ({detail})")

    target_ok, missing = check_per_target(solution, scenario)
    detail = "every target imaged" if target_ok else "targets without a viewpoint: " + ", ".join(map(str, missing))
    print(f"per_target: {'PASS' if target_ok else 'FAIL'} ({detail})")

    ok = energy_ok and unique_ok and target_ok
    print("valid" if ok else "INVALID")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_sweep(args) -> int:
    plan = load_plan(args.plan)
    if args.workers is not None:
        plan = replace(plan, workers=args.workers)
    if args.distance_2d:
        plan = replace(plan, adpc=replace(plan.adpc, distance_mode="2d"))
    out = Path(args.out) if args.out else run_dir() / f"seed{plan.base_seed}_{time.strftime('%Y%m%d-%H%M%S')}"
    print(f"running {plan.size} trials into {out}")
    records = run_sweep(plan, out)
    errors = [r for r in records if r.error]
    print(f"{len(records)} records, {len(errors)} failed")
    for r in errors[:5]:
        print(f"  {r.method} N={r.N} K={r.K} trial={r.trial}: {r.error}")
    print(f"wrote {out / 'records.csv'}")
    return EXIT_OK


def _samples(records_path: Path):
    folder = records_path.parent / "samples"
    out = []
    for scen in sorted(folder.glob("*.scenario.txt")):
        stem = scen.name[: -len(".scenario.txt")]
        sol = folder / f"{stem}.solution.txt"
        if sol.exists():
            out.append((stem, load_scenario(scen), load_solution(sol)))
    return out


def cmd_plot(args) -> int:
    records_path = Path(args.records)
    records = read_records(records_path)
    aggregates = aggregate(records)
    out = Path(args.out) if args.out else records_path.parent / "plots"
    written = emit_plot_data(aggregates, out, _samples(records_path))
    for path in written:
        print(f"wrote {path}")
    try:
        sys.stdout.write(trend_checks(aggregates).format())
    except InsufficientData as exc:
        print(f"trend checks skipped: {exc}")
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # accepted before or after the subcommand; SUPPRESS keeps the global value
    common.add_argument("--distance-2d", action="store_true", default=argparse.SUPPRESS,
                        help="measure legs horizontally, ignoring altitude")

    parser = argparse.ArgumentParser(
        prog="sarcov", description="Energy-constrained multi-UAV multi-view coverage planning.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--distance-2d", action="store_true", default=False,
                        help="measure legs horizontally, ignoring altitude")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", parents=[common], help="write a random scenario file")
    p.add_argument("--m", type=int, default=20, help="number of targets")
    p.add_argument("--area", type=float, default=2000.0, help="side of the square area (m)")
    p.add_argument("--h", type=float, default=500.0, help="flight altitude (m)")
    p.add_argument("--theta", type=float, default=60.0, help="pitch angle (degrees, 0 < theta <= 90)")
    p.add_argument("--k", type=int, default=3, help="viewpoints per target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"scenario path (default: ${RUN_DIR_ENV} or ./runs)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("plan", parents=[common], help="cluster and route one scenario")
    p.add_argument("scenario", help="scenario file")
    p.add_argument("--n", type=int, default=5, help="number of UAVs")
    p.add_argument("--clustering", choices=CLUSTERING_METHODS, default="adpc")
    p.add_argument("--solver", choices=SOLVERS, default="pso")
    p.add_argument("--xi", type=float, default=AdpcParams.xi, help="expansion index of the adaptive factor")
    p.add_argument("--d-c-percentile", type=float, default=AdpcParams.d_c_percentile,
                   help="cutoff distance as a percentile of pairwise distances")
    p.add_argument("--iterations", type=int, default=SolverConfig.max_iterations)
    p.add_argument("--population", type=int, default=SolverConfig.population_size)
    p.add_argument("--seed", type=int, default=0)
    _add_energy_flags(p)
    p.add_argument("--out", help="solution path")
    p.add_argument("--clusters", help="also write the cluster assignment dump here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("sweep", parents=[common], help="run an experiment plan")
    p.add_argument("plan", help="key=value plan file")
    p.add_argument("--out", help="run directory (default: <run dir>/seed<base_seed>_<timestamp>)")
    p.add_argument("--workers", type=int, help="override the plan's worker count")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="check a solution against the constraints")
    p.add_argument("scenario")
    p.add_argument("solution")
    _add_energy_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", parents=[common], help="aggregate records and write plot data")
    p.add_argument("records", help="records.csv from a sweep")
    p.add_argument("--out", help="output directory (default: plots/ next to the records)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SarcovError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
