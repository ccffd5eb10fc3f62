import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flowbot.scenario import load_scenario, parse_scenario, serialize_scene
from flowbot.world import (
    DynamicScript,
    ScenarioError,
    Texture,
    WallSegment,
    WorldScene,
    cast_ray,
    sample_texture,
    step_world,
)

TEX = {"floor": Texture("checker", 0.5, 0.6), "default": Texture("value-noise", 0.25, 0.9, 1)}


def corridor(width=4.0, length=20.0, scripts=()):
    h = width / 2
    walls = (WallSegment((0.0, h), (length, h)), WallSegment((0.0, -h), (length, -h)))
    return WorldScene(walls, tuple(scripts), dict(TEX))


def brute_force_ray(walls, origin, direction):
    """Nearest hit by solving each wall's intersection with homogeneous lines."""
    ox, oy = origin
    dx, dy = direction
    best = None
    for i, w in enumerate(walls):
        (ax, ay), (bx, by) = w.p0, w.p1
        # line through the ray and line through the wall, as (a, b, c) with ax + by = c
        l1 = (dy, -dx, dy * ox - dx * oy)
        l2 = (by - ay, -(bx - ax), (by - ay) * ax - (bx - ax) * ay)
        det = l1[0] * l2[1] - l2[0] * l1[1]
        if det == 0:
            continue
        px = (l1[2] * l2[1] - l2[2] * l1[1]) / det
        py = (l1[0] * l2[2] - l2[0] * l1[2]) / det
        t = (px - ox) * dx + (py - oy) * dy
        seg_len2 = (bx - ax) ** 2 + (by - ay) ** 2
        s = ((px - ax) * (bx - ax) + (py - ay) * (by - ay)) / seg_len2
        if t <= 1e-12 or s < 0 or s > 1:
            continue
        if best is None or t < best[0]:
            best = (t, i)
    return best


def test_load_straight_corridor():
    scene, config = load_scenario("straight_corridor")
    assert len(scene.walls) == 2
    assert scene.scripts == ()
    lengths = [w.length for w in scene.walls]
    assert lengths == [20.0, 20.0]
    assert abs(scene.walls[0].p0[1] - scene.walls[1].p0[1]) == 4.0


def test_script_with_bad_wall_index_is_rejected():
    text = """
[wall]
p0 = 0 2
p1 = 20 2
[wall]
p0 = 0 -2
p1 = 20 -2
[script]
wall = 99
waypoints = 0 0; 1 0
speed = 1
"""
    with pytest.raises(ScenarioError, match="wall_index 99"):
        parse_scenario(text)


def test_parse_error_reports_line_number():
    with pytest.raises(ScenarioError, match=r":3:"):
        parse_scenario("[wall]\np0 = 0 0\np1 = 1 oops\n")
    with pytest.raises(ScenarioError, match=r":2:"):
        parse_scenario("[world]\nthis is not a pair\n")
    with pytest.raises(ScenarioError, match="unknown section"):
        parse_scenario("[walls]\n")


def test_narrowing_widths_by_ray_probes():
    scene, _ = load_scenario("narrowing")

    def width_at(x):
        up = cast_ray(scene, (x, 0.0), (0.0, 1.0))
        down = cast_ray(scene, (x, 0.0), (0.0, -1.0))
        return up.distance + down.distance

    assert width_at(5.0) == pytest.approx(4.0, abs=1e-12)
    assert width_at(11.0) == pytest.approx(3.0, abs=1e-12)
    assert width_at(18.0) == pytest.approx(2.0, abs=1e-12)


def test_step_world_without_scripts_is_identity():
    scene = corridor()
    assert step_world(scene, 0.0, 0.1) == scene
    assert step_world(scene, 3.7, 12.0) == scene


def test_scripted_wall_translates_linearly():
    scene = corridor(scripts=[DynamicScript(0, ((0.0, 0.0), (10.0, 0.0)), 0.5)])
    moved = step_world(scene, 0.0, 0.1)
    assert moved.walls[0].p0[0] == pytest.approx(0.05, abs=1e-15)
    assert moved.walls[0].p1[0] == pytest.approx(20.05, abs=1e-12)
    assert moved.walls[0].p0[1] == scene.walls[0].p0[1]
    assert moved.walls[1] == scene.walls[1]


def test_non_looping_script_holds_final_waypoint():
    scene = corridor(scripts=[DynamicScript(1, ((0.0, 0.0), (0.0, 1.0)), 0.5)])
    for k in range(100):
        scene = step_world(scene, k * 0.1, 0.1)
    assert scene.walls[1].p0[1] == pytest.approx(-1.0, abs=1e-12)


def test_looping_script_stays_in_waypoint_hull():
    script = DynamicScript(0, ((0.0, 0.0), (1.5, 0.5)), 0.7, loop=True)
    scene = corridor(scripts=[script])
    base = scene.walls[0].p0
    for k in range(1000):
        scene = step_world(scene, k * 0.1, 0.1)
        dx = scene.walls[0].p0[0] - base[0]
        dy = scene.walls[0].p0[1] - base[1]
        assert -1e-9 <= dx <= 1.5 + 1e-9
        # on the segment between the two waypoints
        assert dy == pytest.approx(dx / 3, abs=1e-9)


@given(
    st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=4),
    st.floats(0, 2),
    st.booleans(),
    st.floats(0.01, 0.5),
)
def test_step_world_preserves_wall_length(waypoints, speed, loop, dt):
    scene = corridor(scripts=[DynamicScript(0, tuple(waypoints), speed, loop)])
    length = scene.walls[0].length
    for k in range(20):
        scene = step_world(scene, k * dt, dt)
    assert scene.walls[0].length == pytest.approx(length, abs=1e-9)


def test_cast_ray_perpendicular_wall():
    scene = WorldScene((WallSegment((1.0, -5.0), (1.0, 5.0)),), textures=dict(TEX))
    hit = cast_ray(scene, (0.0, 0.0), (1.0, 0.0))
    assert hit.distance == 1.0
    assert hit.wall_index == 0
    assert hit.texture_coord == pytest.approx(5.0)


def test_cast_ray_parallel_misses():
    scene = corridor()
    assert cast_ray(scene, (-5.0, 0.0), (1.0, 0.0)) is None
    assert cast_ray(scene, (25.0, 0.0), (-1.0, 0.0)) is None


def test_cast_ray_tie_goes_to_lowest_index():
    walls = (WallSegment((2.0, -1.0), (2.0, 1.0)), WallSegment((2.0, 1.0), (2.0, -1.0)))
    scene = WorldScene(walls, textures=dict(TEX))
    assert cast_ray(scene, (0.0, 0.0), (1.0, 0.0)).wall_index == 0


def test_cast_ray_rejects_non_unit_direction():
    with pytest.raises(ValueError):
        cast_ray(corridor(), (0.0, 0.0), (2.0, 0.0))


coords = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=60)
@given(
    st.lists(st.tuples(coords, coords, coords, coords), min_size=1, max_size=8),
    st.tuples(coords, coords),
    st.floats(0, 2 * math.pi),
)
def test_cast_ray_matches_brute_force(segs, origin, angle):
    walls = tuple(WallSegment((a, b), (c, d)) for a, b, c, d in segs if math.hypot(c - a, d - b) > 1e-3)
    if not walls:
        return
    scene = WorldScene(walls, textures=dict(TEX))
    direction = (math.cos(angle), math.sin(angle))
    hit = cast_ray(scene, origin, direction)
    expected = brute_force_ray(walls, origin, direction)
    if expected is None:
        assert hit is None
    else:
        assert hit is not None
        assert hit.distance == pytest.approx(expected[0], rel=1e-9, abs=1e-9)


def test_uniform_texture_is_constant():
    tex = Texture("uniform", 0.5, 0.0)
    vals = sample_texture(tex, np.linspace(-50, 50, 999), np.linspace(0, 1, 999))
    assert np.all(vals == vals[0])


def test_uniform_texture_forces_zero_contrast():
    assert Texture("uniform", 1.0, 0.7).contrast == 0.0


def test_checker_levels_differ_by_contrast():
    tex = Texture("checker", 0.5, 0.6)
    a = sample_texture(tex, 0.1, 0.1)
    b = sample_texture(tex, 0.6, 0.1)
    assert abs(a - b) == pytest.approx(0.6)
    assert {round(a, 12), round(b, 12)} == {0.2, 0.8}


def test_value_noise_is_deterministic():
    tex = Texture("value-noise", 0.3, 0.9, seed=5)
    c = np.random.default_rng(0).uniform(-20, 20, 1000)
    h = np.random.default_rng(1).uniform(0, 1, 1000)
    first = sample_texture(tex, c, h)
    second = sample_texture(Texture("value-noise", 0.3, 0.9, seed=5), c, h)
    assert np.array_equal(first, second)
    other = sample_texture(Texture("value-noise", 0.3, 0.9, seed=6), c, h)
    assert not np.array_equal(first, other)


@pytest.mark.parametrize("kind", ["checker", "stripes", "value-noise"])
def test_texture_mean_and_range(kind):
    tex = Texture(kind, 0.4, 0.8, seed=3)
    c = np.linspace(0, 400, 200_001)
    vals = sample_texture(tex, c, 0.37)
    assert vals.min() >= 0.5 * (1 - 0.8) - 1e-12
    assert vals.max() <= 0.5 * (1 + 0.8) + 1e-12
    assert vals.mean() == pytest.approx(0.5, abs=0.03)


@pytest.mark.parametrize("name", ["straight_corridor", "narrowing", "side_opening", "moving_wall", "dark_wall", "bend", "maze"])
def test_scenario_round_trip(name):
    scene, _ = load_scenario(name)
    again, _ = parse_scenario(serialize_scene(scene))
    assert again == scene
    assert parse_scenario(serialize_scene(again))[0] == again


def test_validation_names_offending_wall():
    with pytest.raises(ScenarioError, match="wall 0"):
        WorldScene((WallSegment((1.0, 1.0), (1.0, 1.0)),), textures=dict(TEX))
    with pytest.raises(ScenarioError, match="wall 1 brightness"):
        WorldScene((WallSegment((0.0, 0.0), (1.0, 0.0)), WallSegment((0.0, 1.0), (1.0, 1.0), brightness=1.5)), textures=dict(TEX))
