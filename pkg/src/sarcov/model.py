"""Energy model, constraint checks, coverage metrics and the solution file.

A solution assigns each UAV a closed tour from the base through some
viewpoints and back. It is feasible when

* every tour fits the energy budget
  (``e_flight * distance + e_image * visits <= e_max``),
* no viewpoint is visited by two UAVs, and
* every target has at least one visited viewpoint.

The objective is the coverage rate, ``visited / (M * K)``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .scenario import ORIGIN, Point3, Scenario, generate_viewpoints

DISTANCE_MODES = ("3d", "2d")

# (target_id, view_index)
VpRef = tuple


def check_mode(mode: str) -> str:
    if mode not in DISTANCE_MODES:
        raise ValidationError(f"distance mode must be one of {DISTANCE_MODES}, got {mode!r}")
    return mode


def leg_distance(a: Point3, b: Point3, mode: str = "3d") -> float:
    """Euclidean distance; ``mode="2d"`` ignores altitude."""
    dx = a.x - b.x
    dy = a.y - b.y
    dz = a.z - b.z if check_mode(mode) == "3d" else 0.0
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def distance_matrix(a: np.ndarray, b: np.ndarray | None = None, mode: str = "3d") -> np.ndarray:
    """Pairwise leg distances between the rows of ``a`` and ``b``."""
    check_mode(mode)
    a = np.asarray(a, dtype=float)
    b = a if b is None else np.asarray(b, dtype=float)
    if mode == "2d":
        a, b = a[:, :2], b[:, :2]
    diff = a[:, None, :] - b[None, :, :]
    sq = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]
    if mode == "3d":
        sq = sq + diff[..., 2] * diff[..., 2]
    return np.sqrt(sq)


@dataclass(frozen=True)
class EnergyModel:
    e_flight: float = 1.0
    e_image: float = 200.0
    e_max: float = 8000.0

    def __post_init__(self):
        for name in ("e_flight", "e_image", "e_max"):
            value = getattr(self, name)
            # a free camera is allowed; flight and budget must be positive
            low_ok = value >= 0 if name == "e_image" else value > 0
            if not (math.isfinite(value) and low_ok):
                raise ValidationError(f"{name} must be finite and {'>= 0' if name == 'e_image' else '> 0'}, got {value!r}")

    def energy(self, distance: float, visits: int) -> float:
        return self.e_flight * distance + self.e_image * visits


@dataclass(frozen=True)
class Route:
    uav_id: int
    visit_order: tuple = ()
    total_distance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "visit_order", tuple(tuple(r) for r in self.visit_order))

    @property
    def covered_count(self) -> int:
        return len(self.visit_order)


@dataclass(frozen=True)
class Solution:
    routes: tuple
    dropped: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))
        object.__setattr__(self, "dropped", frozenset(tuple(r) for r in self.dropped))

    @property
    def covered(self) -> set:
        return {ref for r in self.routes for ref in r.visit_order}

    @property
    def total_distance(self) -> float:
        return sum(r.total_distance for r in self.routes)


@dataclass(frozen=True)
class SolutionMetrics:
    coverage_rate: float
    per_uav_energy: list
    targets_fully_missed: int
    feasible: bool
    per_target_covered: list
    total_distance: float
    energy_ok: bool
    uniqueness_ok: bool
    per_target_ok: bool


def viewpoint_positions(scenario: Scenario) -> dict:
    return {v.ref: v.position for v in generate_viewpoints(scenario)}


def route_distance(refs, positions: dict, mode: str = "3d") -> float:
    """Closed tour length base -> refs... -> base."""
    total = 0.0
    prev = ORIGIN
    for ref in refs:
        p = positions[tuple(ref)]
        total += leg_distance(prev, p, mode)
        prev = p
    if refs:
        total += leg_distance(prev, ORIGIN, mode)
    return total


def build_route(uav_id: int, refs, positions: dict, mode: str = "3d") -> Route:
    refs = tuple(tuple(r) for r in refs)
    return Route(uav_id, refs, route_distance(refs, positions, mode))


def route_energy(route: Route, em: EnergyModel) -> float:
    if not route.visit_order:
        return 0.0
    return em.energy(route.total_distance, route.covered_count)


def check_energy(solution: Solution, em: EnergyModel) -> list:
    """Per-UAV verdict of the budget inequality (inclusive, no slack)."""
    return [route_energy(r, em) <= em.e_max for r in solution.routes]


def check_uniqueness(solution: Solution):
    """Return ``(ok, offenders)``; offenders are refs visited more than once."""
    counts = Counter(ref for r in solution.routes for ref in r.visit_order)
    offenders = {ref for ref, c in counts.items() if c > 1}
    return not offenders, offenders


def check_per_target(solution: Solution, scenario: Scenario | None = None):
    """Return ``(ok, uncovered_target_ids)``.

    Without a scenario, the target set is inferred from every reference the
    solution mentions (routes and dropped).
    """
    covered_targets = {ref[0] for ref in solution.covered}
    if scenario is not None:
        all_targets = {t.id for t in scenario.targets}
    else:
        all_targets = covered_targets | {ref[0] for ref in solution.dropped}
    missing = sorted(all_targets - covered_targets)
    return not missing, missing


def compute_metrics(solution: Solution, scenario: Scenario, em: EnergyModel) -> SolutionMetrics:
    covered = solution.covered
    energy_flags = check_energy(solution, em)
    unique_ok, _ = check_uniqueness(solution)
    target_ok, missing = check_per_target(solution, scenario)
    per_target = [0] * scenario.M
    for tid, _k in covered:
        per_target[tid - 1] += 1
    return SolutionMetrics(
        coverage_rate=len(covered) / scenario.viewpoint_count,
        per_uav_energy=[route_energy(r, em) for r in solution.routes],
        targets_fully_missed=len(missing),
        feasible=all(energy_flags) and unique_ok and target_ok,
        per_target_covered=per_target,
        total_distance=solution.total_distance,
        energy_ok=all(energy_flags),
        uniqueness_ok=unique_ok,
        per_target_ok=target_ok,
    )


# -- text formats --------------------------------------------------------------

def _format_refs(refs) -> str:
    return ",".join(f"{m}:{k}" for m, k in refs)


def format_solution(solution: Solution) -> str:
    lines = [f"solution v1 N={len(solution.routes)}"]
    for r in solution.routes:
        lines.append(f"route {r.uav_id} d={r.total_distance!r} vps={_format_refs(r.visit_order)}")
    lines.append(f"dropped vps={_format_refs(sorted(solution.dropped))}")
    return "\n".join(lines) + "\n"


def _parse_refs(text, line):
    if not text:
        return ()
    refs = []
    for item in text.split(","):
        m, sep, k = item.partition(":")
        try:
            if not sep:
                raise ValueError
            refs.append((int(m), int(k)))
        except ValueError:
            raise ParseError(f"bad viewpoint reference {item!r}", line=line, field="vps") from None
    return tuple(refs)


def _field(token, name, line):
    key, sep, value = token.partition("=")
    if key != name or not sep:
        raise ParseError(f"expected '{name}=...'", line=line, field=name)
    return value


def parse_solution(text: str) -> Solution:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty solution file", line=1)
    lineno, header = lines[0]
    parts = header.split()
    if parts[:2] != ["solution", "v1"] or len(parts) != 3:
        raise ParseError("expected header 'solution v1 N=<int>'", line=lineno)
    try:
        n = int(_field(parts[2], "N", lineno))
    except ValueError:
        raise ParseError("N must be an integer", line=lineno, field="N") from None
    routes, dropped, seen_dropped = [], (), False
    for lineno, ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "route" and len(parts) in (3, 4):
            try:
                uav = int(parts[1])
                d = float(_field(parts[2], "d", lineno))
            except ValueError:
                raise ParseError("bad route id or distance", line=lineno) from None
            refs = _parse_refs(_field(parts[3], "vps", lineno) if len(parts) == 4 else "", lineno)
            routes.append(Route(uav, refs, d))
        elif parts[0] == "dropped" and len(parts) in (1, 2) and not seen_dropped:
            dropped = _parse_refs(_field(parts[1], "vps", lineno) if len(parts) == 2 else "", lineno)
            seen_dropped = True
        else:
            raise ParseError(f"unexpected line {ln!r}", line=lineno)
    if len(routes) != n:
        raise ParseError(f"header declares N={n} but file lists {len(routes)} routes")
    return Solution(tuple(routes), frozenset(dropped))


def save_solution(solution: Solution, path) -> None:
    Path(path).write_text(format_solution(solution), encoding="utf-8")


def load_solution(path) -> Solution:
    return parse_solution(Path(path).read_text(encoding="utf-8"))


def format_metrics(metrics: SolutionMetrics) -> str:
    """Flat ``key=value`` block, one pair per line."""
    rows = [
        ("coverage_rate", repr(metrics.coverage_rate)),
        ("feasible", str(metrics.feasible).lower()),
        ("targets_fully_missed", str(metrics.targets_fully_missed)),
        ("total_distance", repr(metrics.total_distance)),
        ("per_uav_energy", ";".join(repr(e) for e in metrics.per_uav_energy)),
        ("per_target_covered", ";".join(str(c) for c in metrics.per_target_covered)),
    ]
    return "\n".join(f"{k}={v}" for k, v in rows) + "\n"
