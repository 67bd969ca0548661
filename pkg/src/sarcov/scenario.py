"""World model: targets, base station, imaging geometry and viewpoints.

Every target is observed from ``K`` azimuths. The viewpoints of a target sit
on a horizontal circle of radius ``H * cos(theta)`` around it at altitude
``H``. View 1 is the point of that circle closest to the base; the others
follow counterclockwise in steps of ``360 / K`` degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateTarget, GenerationFailure, IndexOutOfRange, ParseError, ValidationError

# Tolerance for the "target too close to base" check, meters.
DEGENERACY_EPS = 1e-9

MAX_REJECTIONS = 10_000


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"Point3.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def horizontal_norm(self) -> float:
        return math.hypot(self.x, self.y)


ORIGIN = Point3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Target:
    id: int
    position: Point3

    def __post_init__(self):
        if self.position.z != 0.0:
            raise ValidationError(f"target {self.id}: z must be 0, got {self.position.z}")


@dataclass(frozen=True)
class Viewpoint:
    target_id: int
    view_index: int
    position: Point3

    @property
    def ref(self) -> tuple[int, int]:
        return (self.target_id, self.view_index)


def standoff(altitude_H: float, pitch_theta: float) -> float:
    """Horizontal distance between a viewpoint and its target."""
    return altitude_H * math.cos(math.radians(pitch_theta))


def _check_pitch(pitch_theta: float) -> None:
    if not (0.0 < pitch_theta <= 90.0):
        raise ValidationError(f"pitch angle theta must lie in (0, 90] degrees, got {pitch_theta}")


@dataclass(frozen=True)
class Scenario:
    """Targets plus the shared imaging geometry.

    The base station is fixed at the origin. ``area_size`` is the side of the
    square mission area, centered on the base.
    """

    targets: tuple[Target, ...]
    altitude_H: float
    pitch_theta: float
    view_count_K: int
    area_size: float
    base: Point3 = field(default=ORIGIN)

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.base != ORIGIN:
            raise ValidationError("base station must sit at the origin")
        if not (math.isfinite(self.altitude_H) and self.altitude_H > 0):
            raise ValidationError(f"altitude H must be positive and finite, got {self.altitude_H}")
        _check_pitch(self.pitch_theta)
        if int(self.view_count_K) != self.view_count_K or self.view_count_K < 1:
            raise ValidationError(f"view count K must be an integer >= 1, got {self.view_count_K}")
        if not (math.isfinite(self.area_size) and self.area_size > 0):
            raise ValidationError(f"area size must be positive, got {self.area_size}")
        if not self.targets:
            raise ValidationError("scenario needs at least one target")
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate target ids: {dup}")
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise ValidationError("target ids must be contiguous 1..M")
        if ids != sorted(ids):
            object.__setattr__(self, "targets", tuple(sorted(self.targets, key=lambda t: t.id)))
        limit = standoff(self.altitude_H, self.pitch_theta) + DEGENERACY_EPS
        for t in self.targets:
            if t.position.horizontal_norm <= limit:
                raise DegenerateTarget(
                    f"target {t.id} lies within H*cos(theta)={limit:.6g} m of the base"
                )

    @property
    def M(self) -> int:
        return len(self.targets)

    @property
    def K(self) -> int:
        return self.view_count_K

    @property
    def viewpoint_count(self) -> int:
        return self.M * self.K

    def target(self, target_id: int) -> Target:
        return self.targets[target_id - 1]


def first_viewpoint(target: Target, altitude_H: float, pitch_theta: float) -> Point3:
    """Viewpoint of ``target`` nearest the base, at altitude ``altitude_H``.

    The horizontal position is pulled back toward the base along the
    base-target ray by ``H * cos(theta)``.
    """
    _check_pitch(pitch_theta)
    x, y = target.position.x, target.position.y
    norm = math.hypot(x, y)
    reach = standoff(altitude_H, pitch_theta)
    if norm == 0.0 or norm <= reach + DEGENERACY_EPS:
        raise DegenerateTarget(
            f"target {target.id} at horizontal range {norm:.6g} m cannot host a "
            f"viewpoint circle of radius {reach:.6g} m"
        )
    scale = 1.0 - reach / norm
    return Point3(scale * x, scale * y, float(altitude_H))


def rotate_viewpoint(first: Point3, target: Target, k: int, K: int) -> Point3:
    """Rotate the first viewpoint about ``target`` by ``(k - 1) * 360 / K`` degrees CCW."""
    if not (1 <= k <= K):
        raise IndexOutOfRange(f"view index {k} outside [1, {K}]")
    if k == 1:
        return first
    angle = math.radians(360.0 / K * (k - 1))
    c, s = math.cos(angle), math.sin(angle)
    dx = first.x - target.position.x
    dy = first.y - target.position.y
    return Point3(
        dx * c - dy * s + target.position.x,
        dx * s + dy * c + target.position.y,
        first.z,
    )


def generate_viewpoints(scenario: Scenario) -> list[Viewpoint]:
    """All ``M * K`` viewpoints ordered by (target_id, view_index)."""
    out = []
    for t in scenario.targets:
        first = first_viewpoint(t, scenario.altitude_H, scenario.pitch_theta)
        for k in range(1, scenario.K + 1):
            out.append(Viewpoint(t.id, k, rotate_viewpoint(first, t, k, scenario.K)))
    return out


def viewpoint_array(viewpoints) -> np.ndarray:
    """Stack viewpoint positions into an ``(n, 3)`` float array."""
    if not viewpoints:
        return np.zeros((0, 3))
    return np.array([[v.position.x, v.position.y, v.position.z] for v in viewpoints], dtype=float)


def random_scenario(M, area_size, altitude_H, pitch_theta, K, seed, center=(0.0, 0.0)) -> Scenario:
    """Sample ``M`` targets uniformly in the square of side ``area_size``.

    Samples closer to the base than ``H * cos(theta)`` are rejected. The
    square is centered on ``center`` (the base by default).
    """
    if M < 1:
        raise ValidationError(f"M must be >= 1, got {M}")
    rng = np.random.default_rng(seed)
    half = area_size / 2.0
    limit = standoff(altitude_H, pitch_theta) + DEGENERACY_EPS
    targets = []
    rejected = 0
    while len(targets) < M:
        x, y = rng.uniform(-half, half, size=2)
        x += center[0]
        y += center[1]
        if math.hypot(x, y) <= limit:
            rejected += 1
            if rejected >= MAX_REJECTIONS:
                raise GenerationFailure(
                    f"gave up after {rejected} rejected samples: no room for targets "
                    f"beyond {limit:.6g} m of the base in a {area_size} m square"
                )
            continue
        targets.append(Target(len(targets) + 1, Point3(float(x), float(y), 0.0)))
    return Scenario(tuple(targets), float(altitude_H), float(pitch_theta), int(K), float(area_size))


# -- text format ---------------------------------------------------------------

def format_scenario(scenario: Scenario) -> str:
    lines = [
        f"scenario v1 M={scenario.M} H={scenario.altitude_H!r} theta={scenario.pitch_theta!r} "
        f"K={scenario.K} area={scenario.area_size!r}"
    ]
    for t in scenario.targets:
        lines.append(f"target {t.id} {t.position.x!r} {t.position.y!r}")
    return "\n".join(lines) + "\n"


def _parse_number(text, kind, line, name):
    try:
        value = kind(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as {kind.__name__}", line=line, field=name) from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", line=line, field=name)
    return value


def parse_scenario(text: str) -> Scenario:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ParseError("empty scenario file", line=1)
    lineno, header = lines[0]
    parts = header.split()
    if parts[:2] != ["scenario", "v1"]:
        raise ParseError("expected header 'scenario v1 ...'", line=lineno)
    kinds = {"M": int, "H": float, "theta": float, "K": int, "area": float}
    values = {}
    for token in parts[2:]:
        key, sep, raw = token.partition("=")
        if not sep or key not in kinds:
            raise ParseError(f"unexpected header token {token!r}", line=lineno, field=key)
        values[key] = _parse_number(raw, kinds[key], lineno, key)
    missing = [k for k in kinds if k not in values]
    if missing:
        raise ParseError(f"header missing {', '.join(missing)}", line=lineno)
    targets = []
    for lineno, ln in lines[1:]:
        parts = ln.split()
        if parts[0] != "target" or len(parts) != 4:
            raise ParseError("expected 'target <id> <x> <y>'", line=lineno)
        tid = _parse_number(parts[1], int, lineno, "id")
        x = _parse_number(parts[2], float, lineno, "x")
        y = _parse_number(parts[3], float, lineno, "y")
        targets.append(Target(tid, Point3(x, y, 0.0)))
    if len(targets) != values["M"]:
        raise ParseError(f"header declares M={values['M']} but file lists {len(targets)} targets")
    return Scenario(tuple(targets), values["H"], values["theta"], values["K"], values["area"])


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(format_scenario(scenario), encoding="utf-8")


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text(encoding="utf-8"))
