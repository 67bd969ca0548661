import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sarcov.errors import DegenerateTarget, GenerationFailure, IndexOutOfRange, ParseError, ValidationError
from sarcov.scenario import (
    Point3, Scenario, Target, first_viewpoint, format_scenario, generate_viewpoints, load_scenario,
    parse_scenario, random_scenario, rotate_viewpoint, save_scenario, standoff,
)


def close(p, xyz, tol=1e-9):
    return all(math.isclose(a, b, rel_tol=tol, abs_tol=tol) for a, b in zip((p.x, p.y, p.z), xyz))


# -- first viewpoint -----------------------------------------------------------

def test_first_viewpoint_on_axis():
    vp = first_viewpoint(Target(1, Point3(1000, 0)), 500, 60)
    assert close(vp, (750, 0, 500))


def test_first_viewpoint_straight_down():
    vp = first_viewpoint(Target(1, Point3(0, 800)), 400, 90)
    assert close(vp, (0, 800, 400))


def test_first_viewpoint_on_base_target_ray():
    vp = first_viewpoint(Target(1, Point3(600, 800)), 500, 60)
    assert close(vp, (450, 600, 500))
    assert math.isclose(math.hypot(vp.x, vp.y), 750)
    assert math.isclose(vp.x * 800 - vp.y * 600, 0.0, abs_tol=1e-9)


@pytest.mark.parametrize("position", [(0, 0), (100, 0), (250, 0)])
def test_first_viewpoint_degenerate(position):
    with pytest.raises(DegenerateTarget):
        first_viewpoint(Target(1, Point3(*position)), 500, 60)


# -- rotation ------------------------------------------------------------------

TARGET = Target(1, Point3(1000, 0))
FIRST = Point3(750, 0, 500)


def test_rotate_identity():
    assert rotate_viewpoint(FIRST, TARGET, 1, 4) is FIRST


def test_rotate_quarter_turn():
    assert close(rotate_viewpoint(FIRST, TARGET, 2, 4), (1000, -250, 500))


def test_rotate_half_turn():
    assert close(rotate_viewpoint(FIRST, TARGET, 3, 4), (1250, 0, 500))


@pytest.mark.parametrize("k", [0, 5, -1])
def test_rotate_index_out_of_range(k):
    with pytest.raises(IndexOutOfRange):
        rotate_viewpoint(FIRST, TARGET, k, 4)


# -- viewpoint sets ------------------------------------------------------------

def test_twenty_targets_three_views():
    scenario = random_scenario(20, 2000, 500, 60, 3, seed=0)
    assert len(generate_viewpoints(scenario)) == 60


def test_single_viewpoint_matches_first():
    t = Target(1, Point3(900, -300))
    scenario = Scenario((t,), 500, 60, 1, 2000)
    (vp,) = generate_viewpoints(scenario)
    assert vp.position == first_viewpoint(t, 500, 60)


def test_six_views_sixty_degrees_apart():
    targets = (Target(1, Point3(900, 200)), Target(2, Point3(-700, 650)))
    scenario = Scenario(targets, 500, 45, 6, 2000)
    vps = generate_viewpoints(scenario)
    assert len(vps) == 12
    for t in targets:
        own = [v for v in vps if v.target_id == t.id]
        offsets = [np.array([v.position.x - t.position.x, v.position.y - t.position.y]) for v in own]
        for i in range(6):
            for j in range(i + 1, 6):
                cos = offsets[i] @ offsets[j] / (np.linalg.norm(offsets[i]) * np.linalg.norm(offsets[j]))
                angle = math.degrees(math.acos(max(-1.0, min(1.0, cos))))
                expected = 60.0 * min(j - i, 6 - (j - i))
                assert math.isclose(angle, expected, abs_tol=1e-6)


def test_ordering_and_purity():
    scenario = random_scenario(5, 2000, 500, 60, 4, seed=3)
    a, b = generate_viewpoints(scenario), generate_viewpoints(scenario)
    assert a == b
    assert [v.ref for v in a] == [(m, k) for m in range(1, 6) for k in range(1, 5)]


@settings(max_examples=50, deadline=None)
@given(
    x=st.floats(-5000, 5000), y=st.floats(-5000, 5000),
    H=st.floats(50, 1000), theta=st.floats(1, 90), K=st.integers(1, 12),
)
def test_circle_invariants(x, y, H, theta, K):
    r = standoff(H, theta)
    if math.hypot(x, y) <= r + 1.0:
        return
    t = Target(1, Point3(x, y))
    vps = generate_viewpoints(Scenario((t,), H, theta, K, 20000))
    offsets = np.array([[v.position.x - x, v.position.y - y] for v in vps])
    assert np.allclose(np.hypot(offsets[:, 0], offsets[:, 1]), r, atol=1e-6)
    base_range = [math.hypot(v.position.x, v.position.y) for v in vps]
    assert base_range[0] <= min(base_range) + 1e-6
    if K >= 2:
        assert np.allclose(offsets.sum(axis=0), 0.0, atol=1e-6)
    assert all(v.position.z == H for v in vps)


# -- random instances ----------------------------------------------------------

def test_random_scenario_deterministic():
    a = random_scenario(20, 2000, 500, 60, 3, seed=42)
    b = random_scenario(20, 2000, 500, 60, 3, seed=42)
    assert format_scenario(a) == format_scenario(b)


def test_random_scenario_bounds():
    s = random_scenario(20, 2000, 500, 60, 3, seed=7)
    assert s.M == 20
    for t in s.targets:
        assert -1000 <= t.position.x <= 1000 and -1000 <= t.position.y <= 1000
        assert t.position.horizontal_norm > standoff(500, 60)


def test_random_scenario_gives_up():
    with pytest.raises(GenerationFailure):
        random_scenario(1, 10, 500, 0, 1, seed=0)


def test_pitch_out_of_range():
    with pytest.raises(ValidationError, match="pitch"):
        random_scenario(3, 2000, 500, 95, 3, seed=0)


# -- file format ---------------------------------------------------------------

def test_round_trip(tmp_path):
    s = random_scenario(20, 2000, 500, 60, 3, seed=11)
    save_scenario(s, tmp_path / "s.txt")
    assert load_scenario(tmp_path / "s.txt") == s


def test_duplicate_id_rejected():
    text = "scenario v1 M=2 H=500.0 theta=60.0 K=3 area=2000.0\ntarget 1 900 0\ntarget 1 0 900\n"
    with pytest.raises(ValidationError, match="duplicate"):
        parse_scenario(text)


def test_target_at_origin_rejected():
    text = "scenario v1 M=1 H=500.0 theta=60.0 K=3 area=2000.0\ntarget 1 0 0\n"
    with pytest.raises(DegenerateTarget):
        parse_scenario(text)


def test_parse_error_names_line_and_field():
    text = "scenario v1 M=1 H=500.0 theta=60.0 K=3 area=2000.0\ntarget 1 abc 0\n"
    with pytest.raises(ParseError) as info:
        parse_scenario(text)
    assert info.value.line == 2 and info.value.field == "x"


def test_non_finite_coordinate_rejected():
    with pytest.raises(ValidationError):
        Point3(float("nan"), 0.0)
