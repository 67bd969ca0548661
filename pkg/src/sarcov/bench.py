"""Experiment harness: seeded sweeps over UAV and view counts.

A plan fixes the scenario class (M targets in a square area), the energy
model and the method pairs. ``run_sweep`` runs every
(method, N, K, trial) combination, streaming one CSV record per trial.
``aggregate`` and ``trend_checks`` turn records into the coverage curves and
runtime orderings, and ``emit_plot_data`` writes them out as CSV and SVG.

Every trial draws a fresh scenario from ``(base_seed, trial)``. The scenario
does not depend on the method, N or K, so all methods are compared on the
same targets.
"""

from __future__ import annotations

import csv
import gc
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .clustering import METHODS as CLUSTERING_METHODS
from .clustering import AdpcParams, cluster_viewpoints
from .errors import EmptyGroup, InsufficientData, ParseError, ValidationError
from .model import EnergyModel, Solution, compute_metrics, save_solution
from .routing import SOLVERS, SolverConfig, plan_solution, substream
from .scenario import Scenario, generate_viewpoints, random_scenario, save_scenario, viewpoint_array

DEFAULT_METHODS = ("ADPC-PSO", "ADPC-GA", "ADPC-ACO", "DPC-PSO", "KMEANS-PSO")


def parse_method(name: str) -> tuple[str, str]:
    """``"ADPC-PSO"`` -> ``("adpc", "pso")``."""
    clustering, sep, solver = name.strip().lower().partition("-")
    if not sep or clustering not in CLUSTERING_METHODS or solver not in SOLVERS:
        raise ValidationError(
            f"unsupported method pair {name!r}; use CLUSTERING-SOLVER with clustering in "
            f"{[c.upper() for c in CLUSTERING_METHODS]} and solver in {[s.upper() for s in SOLVERS]}"
        )
    return clustering, solver


def method_name(clustering: str, solver: str) -> str:
    return f"{clustering.upper()}-{solver.upper()}"


@dataclass(frozen=True)
class ExperimentPlan:
    M: int = 20
    area: float = 2000.0
    H: float = 500.0
    theta: float = 60.0
    N_values: tuple = (2, 3, 4, 5, 6)
    K_values: tuple = (3,)
    trials: int = 50
    methods: tuple = DEFAULT_METHODS
    energy: EnergyModel = field(default_factory=EnergyModel)
    adpc: AdpcParams = field(default_factory=AdpcParams)
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    base_seed: int = 0
    protect_targets: bool = True
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "N_values", tuple(int(n) for n in self.N_values))
        object.__setattr__(self, "K_values", tuple(int(k) for k in self.K_values))
        object.__setattr__(self, "methods", tuple(method_name(*parse_method(m)) for m in self.methods))
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        for name in ("N_values", "K_values", "methods"):
            if not getattr(self, name):
                raise ValidationError(f"{name} must not be empty")
        if min(self.N_values) < 1 or min(self.K_values) < 1:
            raise ValidationError("N and K values must be >= 1")
        if self.M < 1:
            raise ValidationError("M must be >= 1")

    @property
    def distance_mode(self) -> str:
        return self.adpc.distance_mode

    @property
    def size(self) -> int:
        return len(self.methods) * len(self.N_values) * len(self.K_values) * self.trials


# -- plan file -----------------------------------------------------------------

_PLAN_SCALARS = {
    "M": int, "area": float, "H": float, "theta": float, "trials": int,
    "base_seed": int, "workers": int,
}
_ENERGY_KEYS = {"e_flight": float, "e_image": float, "e_max": float}
_ADPC_KEYS = {
    "xi": float, "d_c_percentile": float, "distance_mode": str, "exclude_same_target": bool,
    "spread_centers": bool, "kmeans_n_init": int,
}
_SOLVER_KEYS = {f.name: f.type for f in fields(SolverConfig) if f.name != "seed"}
_SOLVER_TYPES = {"int": int, "float": float, "str": str, "int | None": int}


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise ValueError(text)


def parse_plan(text: str) -> ExperimentPlan:
    """Parse a ``key=value`` plan file. Unknown keys are rejected."""
    scalars, energy, adpc, solver = {}, {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ParseError("expected key=value", line=lineno)
        try:
            if key in _PLAN_SCALARS:
                scalars[key] = _PLAN_SCALARS[key](value)
            elif key in ("N_values", "K_values"):
                scalars[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key == "methods":
                scalars[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "protect_targets":
                scalars[key] = _bool(value)
            elif key in _ENERGY_KEYS:
                energy[key] = _ENERGY_KEYS[key](value)
            elif key in _ADPC_KEYS:
                kind = _ADPC_KEYS[key]
                adpc[key] = _bool(value) if kind is bool else kind(value)
            elif key in _SOLVER_KEYS:
                solver[key] = _SOLVER_TYPES[_SOLVER_KEYS[key]](value)
            else:
                raise ParseError(f"unknown plan key {key!r}", line=lineno, field=key)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad value {value!r}", line=lineno, field=key) from None
    return ExperimentPlan(
        energy=EnergyModel(**energy), adpc=AdpcParams(**adpc),
        solver_config=SolverConfig(**solver), **scalars,
    )


def format_plan(plan: ExperimentPlan) -> str:
    def fmt(v):
        if isinstance(v, bool):
            return str(v).lower()
        if isinstance(v, (tuple, list)):
            return ",".join(str(x) for x in v)
        return repr(v) if isinstance(v, float) else str(v)

    rows = [(k, getattr(plan, k)) for k in ("M", "area", "H", "theta", "N_values", "K_values",
                                            "trials", "methods", "base_seed", "protect_targets", "workers")]
    rows += [(k, getattr(plan.energy, k)) for k in _ENERGY_KEYS]
    rows += [(k, getattr(plan.adpc, k)) for k in _ADPC_KEYS]
    rows += [(k, getattr(plan.solver_config, k)) for k in _SOLVER_KEYS if getattr(plan.solver_config, k) is not None]
    return "\n".join(f"{k}={fmt(v)}" for k, v in rows) + "\n"


def load_plan(path) -> ExperimentPlan:
    return parse_plan(Path(path).read_text(encoding="utf-8"))


# -- trials --------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    method: str
    N: int
    K: int
    trial: int
    seed: int
    coverage_rate: float
    feasible: bool
    per_uav_energy: tuple
    clustering_runtime: float
    solver_runtime: float
    total_distance: float
    error: str = ""


RECORD_FIELDS = tuple(f.name for f in fields(TrialRecord))
TIMING_FIELDS = ("clustering_runtime", "solver_runtime")


def trial_seed(base_seed: int, trial_index: int) -> int:
    return int(np.random.SeedSequence([int(base_seed), int(trial_index)]).generate_state(1, np.uint64)[0] >> 1)


def trial_scenario(plan: ExperimentPlan, K: int, trial_index: int) -> Scenario:
    seed = trial_seed(plan.base_seed, trial_index)
    return random_scenario(plan.M, plan.area, plan.H, plan.theta, K, substream(seed, "scenario"))


def solve_instance(scenario: Scenario, N: int, clustering: str, solver: str, energy: EnergyModel,
                   adpc: AdpcParams, config: SolverConfig, protect_targets: bool = True):
    """Full pipeline on one scenario. Returns ``(solution, clustering, t_cluster, t_solve)``."""
    viewpoints = generate_viewpoints(scenario)
    points = viewpoint_array(viewpoints)
    groups = np.array([v.target_id for v in viewpoints])
    # collector pauses would bill earlier allocations to whichever phase is running
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter()
        result = cluster_viewpoints(clustering, points, N, adpc, substream(config.seed, "clustering"), groups)
        t1 = time.perf_counter()
        solution = plan_solution(viewpoints, result, energy, solver, config, adpc.distance_mode, protect_targets)
        t2 = time.perf_counter()
    finally:
        if gc_was_enabled:
            gc.enable()
    return solution, result, t1 - t0, t2 - t1


def run_trial(plan: ExperimentPlan, method: str, N: int, K: int, trial_index: int, keep=False):
    """Run one trial. With ``keep=True`` also return ``(scenario, solution)``."""
    clustering, solver = parse_method(method)
    seed = trial_seed(plan.base_seed, trial_index)
    name = method_name(clustering, solver)
    scenario = solution = None
    try:
        scenario = trial_scenario(plan, K, trial_index)
        config = replace(plan.solver_config, seed=seed)
        solution, _, t_cluster, t_solve = solve_instance(
            scenario, N, clustering, solver, plan.energy, plan.adpc, config, plan.protect_targets
        )
        metrics = compute_metrics(solution, scenario, plan.energy)
        record = TrialRecord(
            name, N, K, trial_index, seed, metrics.coverage_rate, metrics.feasible,
            tuple(metrics.per_uav_energy), t_cluster, t_solve, metrics.total_distance,
        )
    except Exception as exc:  # recorded, never skipped
        record = TrialRecord(name, N, K, trial_index, seed, 0.0, False, (), 0.0, 0.0, 0.0,
                             f"{type(exc).__name__}: {exc}")
    if keep:
        return record, scenario, solution
    return record


def calibrate_budget(plan: ExperimentPlan, N: int = 5, K: int = 3, trial_index: int = 0,
                     method: str = "ADPC-PSO", factor: float = 2.0) -> EnergyModel:
    """Budget scaled from an unconstrained run.

    Solves one trial with an effectively unlimited budget and returns the
    plan's energy model with ``e_max`` set to ``factor`` times the largest
    per-UAV energy of that solution.
    """
    if not (math.isfinite(factor) and factor > 0):
        raise ValidationError(f"factor must be positive, got {factor!r}")
    free = replace(plan, energy=replace(plan.energy, e_max=1e300))
    record = run_trial(free, method, N, K, trial_index)
    if record.error:
        raise ValidationError(f"calibration trial failed: {record.error}")
    return replace(plan.energy, e_max=factor * max(record.per_uav_energy))


def _record_row(record: TrialRecord) -> dict:
    row = asdict(record)
    row["feasible"] = str(record.feasible).lower()
    row["per_uav_energy"] = ";".join(repr(float(e)) for e in record.per_uav_energy)
    for key in ("coverage_rate", "clustering_runtime", "solver_runtime", "total_distance"):
        row[key] = repr(float(row[key]))
    return row


def write_records(records, handle, header=True) -> None:
    writer = csv.DictWriter(handle, fieldnames=RECORD_FIELDS, lineterminator="\n")
    if header:
        writer.writeheader()
    for r in records:
        writer.writerow(_record_row(r))


def read_records(path) -> list[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != RECORD_FIELDS:
            raise ParseError(f"{path}: records header must be {','.join(RECORD_FIELDS)}", line=1)
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(TrialRecord(
                    row["method"], int(row["N"]), int(row["K"]), int(row["trial"]), int(row["seed"]),
                    float(row["coverage_rate"]), row["feasible"] == "true",
                    tuple(float(e) for e in row["per_uav_energy"].split(";") if e),
                    float(row["clustering_runtime"]), float(row["solver_runtime"]),
                    float(row["total_distance"]), row["error"] or "",
                ))
            except (TypeError, ValueError):
                raise ParseError(f"{path}: malformed record", line=lineno) from None
    return out


def _trial_job(args):
    plan, method, N, K, trial = args
    return run_trial(plan, method, N, K, trial, keep=(trial == 0))


def run_sweep(plan: ExperimentPlan, out_dir=None, sample_solutions=True) -> list[TrialRecord]:
    """Run the Cartesian product methods x N x K x trials.

    With ``out_dir`` the records are appended to ``records.csv`` as they
    finish (flushed per record), the plan is copied next to them and the
    first trial of every cell is saved under ``samples/``.
    """
    jobs = [(plan, m, N, K, t) for m in plan.methods for N in plan.N_values
            for K in plan.K_values for t in range(plan.trials)]
    records = []
    sink = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "plan.txt").write_text(format_plan(plan), encoding="utf-8")
        sink = open(out / "records.csv", "w", newline="", encoding="utf-8")
        write_records([], sink)
        sink.flush()
    pool = ProcessPoolExecutor(plan.workers) if plan.workers > 1 else None
    try:
        results = pool.map(_trial_job, jobs, chunksize=4) if pool else map(_trial_job, jobs)
        for (_, method, N, K, t), result in zip(jobs, results):
            record, scenario, solution = result if t == 0 else (result, None, None)
            records.append(record)
            if sink is not None:
                write_records([record], sink, header=False)
                sink.flush()
                if t == 0 and sample_solutions and solution is not None:
                    samples = Path(out_dir) / "samples"
                    samples.mkdir(exist_ok=True)
                    stem = f"{method}_N{N}_K{K}"
                    save_scenario(scenario, samples / f"{stem}.scenario.txt")
                    save_solution(solution, samples / f"{stem}.solution.txt")
    finally:
        if pool is not None:
            pool.shutdown()
        if sink is not None:
            sink.close()
    return records


# -- aggregation ---------------------------------------------------------------

@dataclass(frozen=True)
class Aggregate:
    method: str
    N: int
    K: int
    n: int
    coverage_mean: float
    coverage_std: float
    feasible_rate: float
    clustering_mean: float
    clustering_std: float
    clustering_median: float
    solver_mean: float
    solver_std: float
    solver_median: float
    distance_mean: float
    errors: int

    @property
    def coverage_se(self) -> float:
        return self.coverage_std / math.sqrt(self.n) if self.n else math.inf


AGGREGATE_FIELDS = tuple(f.name for f in fields(Aggregate))


def _mean_std(values):
    values = sorted(values)
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def aggregate(records) -> list[Aggregate]:
    """Mean / sample std / median per (method, N, K), keys sorted.

    Failed trials are counted in ``errors`` and left out of the statistics.
    Sums use ``math.fsum`` over sorted values, so record order never matters.
    """
    groups = {}
    for r in records:
        groups.setdefault((r.method, r.N, r.K), []).append(r)
    if not groups:
        raise EmptyGroup("no records to aggregate")
    out = []
    for key in sorted(groups):
        rows = groups[key]
        ok = [r for r in rows if not r.error]
        if not ok:
            raise EmptyGroup(f"every trial failed for {key}")
        cov = _mean_std([r.coverage_rate for r in ok])
        clu = _mean_std([r.clustering_runtime for r in ok])
        sol = _mean_std([r.solver_runtime for r in ok])
        out.append(Aggregate(
            key[0], key[1], key[2], len(ok), cov[0], cov[1],
            sum(r.feasible for r in ok) / len(ok),
            clu[0], clu[1], statistics.median(r.clustering_runtime for r in ok),
            sol[0], sol[1], statistics.median(r.solver_runtime for r in ok),
            math.fsum(sorted(r.total_distance for r in ok)) / len(ok),
            len(rows) - len(ok),
        ))
    return out


def pooled_se(a: Aggregate, b: Aggregate) -> float:
    return math.sqrt(a.coverage_std ** 2 / a.n + b.coverage_std ** 2 / b.n)


@dataclass(frozen=True)
class PredicateResult:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class TrendReport:
    results: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def by_prefix(self, prefix: str) -> list:
        return [r for r in self.results if r.name.startswith(prefix)]

    def format(self) -> str:
        return "\n".join(
            f"{'PASS' if r.passed else 'FAIL'} {r.name} margin={r.margin:.6g} {r.detail}".rstrip()
            for r in self.results
        ) + "\n"


def _index(aggregates):
    return {(a.method, a.N, a.K): a for a in aggregates}


def _monotone(cells, direction, name):
    """``direction`` +1: non-decreasing, -1: non-increasing, within one pooled SE."""
    margins = []
    for a, b in zip(cells, cells[1:]):
        step = direction * (b.coverage_mean - a.coverage_mean)
        margins.append(step + pooled_se(a, b))
    margin = min(margins)
    detail = " ".join(f"{c.coverage_mean:.4f}" for c in cells)
    return PredicateResult(name, margin >= 0.0, margin, f"means=[{detail}]")


def trend_checks(aggregates, proposed="ADPC-PSO", rivals=("DPC-PSO", "KMEANS-PSO"),
                 clustering_trio=("DPC-PSO", "ADPC-PSO", "KMEANS-PSO"),
                 solver_trio=("ADPC-GA", "ADPC-PSO", "ADPC-ACO")) -> TrendReport:
    """Evaluate coverage trends and runtime orderings on whatever the aggregates cover.

    * ``monotone_N``: coverage non-decreasing in N for each (method, K);
    * ``monotone_K``: coverage non-increasing in K for each (method, N);
    * ``dominance``: ``proposed`` within one pooled SE of or above each rival
      in every cell, and strictly above in at least half of them;
    * ``clustering_order``: median clustering time ordered like
      ``clustering_trio`` at every (N, K), plus the proposed clustering's
      median increasing in K;
    * ``solver_order``: median solver time ordered like ``solver_trio``.
    """
    idx = _index(aggregates)
    methods = sorted({a.method for a in aggregates})
    results = []
    for m in methods:
        for K in sorted({a.K for a in aggregates if a.method == m}):
            cells = [idx[(m, N, K)] for N in sorted({a.N for a in aggregates}) if (m, N, K) in idx]
            if len(cells) >= 2:
                results.append(_monotone(cells, +1, f"monotone_N[{m},K={K}]"))
        for N in sorted({a.N for a in aggregates if a.method == m}):
            cells = [idx[(m, N, K)] for K in sorted({a.K for a in aggregates}) if (m, N, K) in idx]
            if len(cells) >= 2:
                results.append(_monotone(cells, -1, f"monotone_K[{m},N={N}]"))
    for rival in rivals:
        cells = sorted((N, K) for (m, N, K) in idx if m == proposed and (rival, N, K) in idx)
        if not cells:
            continue
        margins, wins = [], 0
        for N, K in cells:
            p, r = idx[(proposed, N, K)], idx[(rival, N, K)]
            margins.append(p.coverage_mean - r.coverage_mean + pooled_se(p, r))
            wins += p.coverage_mean > r.coverage_mean
        ok = min(margins) >= 0.0 and wins * 2 >= len(cells)
        results.append(PredicateResult(
            f"dominance[{proposed}>{rival}]", ok, min(margins), f"strict_wins={wins}/{len(cells)}"
        ))
    for title, trio, attr in (("clustering_order", clustering_trio, "clustering_median"),
                              ("solver_order", solver_trio, "solver_median")):
        cells = sorted({(N, K) for (_, N, K) in idx if all((m, N, K) in idx for m in trio)})
        for N, K in cells:
            times = [getattr(idx[(m, N, K)], attr) for m in trio]
            margin = min(b - a for a, b in zip(times, times[1:]))
            label = " < ".join(f"{m}:{t:.3g}s" for m, t in zip(trio, times))
            results.append(PredicateResult(f"{title}[N={N},K={K}]", margin > 0.0, margin, label))
    subject = clustering_trio[1]
    for N in sorted({N for (m, N, _) in idx if m == subject}):
        cells = [idx[(subject, N, K)] for K in sorted({a.K for a in aggregates}) if (subject, N, K) in idx]
        if len(cells) >= 2:
            times = [c.clustering_median for c in cells]
            margin = min(b - a for a, b in zip(times, times[1:]))
            results.append(PredicateResult(
                f"clustering_time_increasing_in_K[{subject},N={N}]", margin > 0.0, margin,
                "medians=[" + " ".join(f"{t:.3g}" for t in times) + "]",
            ))
    if not results:
        raise InsufficientData("aggregates span no swept axis or method comparison")
    return TrendReport(tuple(results))


# -- plot data -----------------------------------------------------------------

def _write_aggregates(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_FIELDS)
        for a in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in (getattr(a, f) for f in AGGREGATE_FIELDS)])


def read_aggregates(path) -> list[Aggregate]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != AGGREGATE_FIELDS:
            raise ParseError(f"{path}: unexpected aggregate header", line=1)
        kinds = [f.type for f in fields(Aggregate)]
        conv = {"str": str, "int": int, "float": float}
        return [Aggregate(*(conv[k](v) for k, v in zip(kinds, row))) for row in reader]


def emit_plot_data(aggregates, out_dir, samples=()) -> list[Path]:
    """Write plot-ready files and return their paths.

    * ``aggregates.csv``: the full table (``read_aggregates`` reads it back);
    * ``coverage_vs_N.csv``: cells of (method, K) rows that sweep N;
    * ``coverage_vs_K.csv``: cells of (method, N) rows that sweep K;
    * ``runtime_table.csv``: per-K clustering and solver medians;
    * one SVG path map per ``(name, scenario, solution)`` in ``samples``.
    """
    aggregates = list(aggregates)
    if not aggregates:
        raise InsufficientData("nothing to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "aggregates.csv"
    _write_aggregates(aggregates, path)
    written.append(path)
    by_mk, by_mn = {}, {}
    for a in aggregates:
        by_mk.setdefault((a.method, a.K), []).append(a)
        by_mn.setdefault((a.method, a.N), []).append(a)
    vs_n = [a for rows in by_mk.values() if len(rows) > 1 for a in rows]
    vs_k = [a for rows in by_mn.values() if len(rows) > 1 for a in rows]
    for name, rows, axis in (("coverage_vs_N.csv", vs_n, "N"), ("coverage_vs_K.csv", vs_k, "K")):
        if not rows:
            continue
        rows = sorted(rows, key=lambda a: (a.method, a.K, a.N) if axis == "N" else (a.method, a.N, a.K))
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "N", "K", "n", "coverage_mean", "coverage_std"])
            for a in rows:
                writer.writerow([a.method, a.N, a.K, a.n, repr(a.coverage_mean), repr(a.coverage_std)])
        written.append(path)
    path = out / "runtime_table.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "N", "K", "clustering_median", "solver_median"])
        for a in sorted(aggregates, key=lambda a: (a.K, a.N, a.method)):
            writer.writerow([a.method, a.N, a.K, repr(a.clustering_median), repr(a.solver_median)])
    written.append(path)
    for name, scenario, solution in samples:
        path = out / f"{name}.svg"
        path.write_text(render_svg(scenario, solution), encoding="utf-8")
        written.append(path)
    return written


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


def render_svg(scenario: Scenario, solution: Solution, size: int = 600) -> str:
    """Top-down path map: base, targets, viewpoints, one polyline per UAV,
    dropped viewpoints drawn with class ``dropped``."""
    viewpoints = generate_viewpoints(scenario)
    pos = {v.ref: v.position for v in viewpoints}
    xs = [0.0] + [t.position.x for t in scenario.targets] + [p.x for p in pos.values()]
    ys = [0.0] + [t.position.y for t in scenario.targets] + [p.y for p in pos.values()]
    lo_x, hi_x, lo_y, hi_y = min(xs), max(xs), min(ys), max(ys)
    span = max(hi_x - lo_x, hi_y - lo_y, 1.0) * 1.1
    cx, cy = (lo_x + hi_x) / 2, (lo_y + hi_y) / 2

    def px(x, y):
        return (f"{(x - cx) / span * size + size / 2:.2f}", f"{size / 2 - (y - cy) / span * size:.2f}")

    buf = io.StringIO()
    buf.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
              f'viewBox="0 0 {size} {size}">\n')
    buf.write("<style>.target{fill:#444}.viewpoint{fill:#2a7}.dropped{fill:none;stroke:#d00;stroke-width:1.5}"
              ".base{fill:#000}.route{fill:none;stroke-width:1.5}</style>\n")
    for i, route in enumerate(solution.routes):
        pts = [px(0.0, 0.0)] + [px(pos[r].x, pos[r].y) for r in route.visit_order] + [px(0.0, 0.0)]
        if len(pts) > 2:
            color = _PALETTE[i % len(_PALETTE)]
            buf.write(f'<polyline class="route" data-uav="{route.uav_id}" stroke="{color}" '
                      f'points="{" ".join(f"{x},{y}" for x, y in pts)}"/>\n')
    for t in scenario.targets:
        x, y = px(t.position.x, t.position.y)
        buf.write(f'<rect class="target" data-id="{t.id}" x="{float(x) - 3:.2f}" y="{float(y) - 3:.2f}" width="6" height="6"/>\n')
    for ref, p in pos.items():
        x, y = px(p.x, p.y)
        cls = "dropped" if ref in solution.dropped else "viewpoint"
        buf.write(f'<circle class="{cls}" data-ref="{ref[0]}:{ref[1]}" cx="{x}" cy="{y}" r="3"/>\n')
    x, y = px(0.0, 0.0)
    buf.write(f'<circle class="base" cx="{x}" cy="{y}" r="6"/>\n</svg>\n')
    return buf.getvalue()
