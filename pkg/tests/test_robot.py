import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flowbot.fuzzy import Command
from flowbot.robot import Constraints, RobotState, apply_command, check_collision, clamp_command
from flowbot.world import Texture, WallSegment, WorldScene

TEX = {"floor": Texture("checker", 0.5, 0.6), "default": Texture("value-noise", 0.25, 0.9, 1)}
C = Constraints()


def corridor():
    return WorldScene((WallSegment((0.0, 2.0), (20.0, 2.0)), WallSegment((0.0, -2.0), (20.0, -2.0))), textures=dict(TEX))


def test_straight_motion():
    s = apply_command(RobotState((0.0, 0.0)), Command(0.0, 0.5), C, 0.1)
    assert s.position == pytest.approx((0.05, 0.0), abs=1e-15)
    assert s.heading == 0.0


def test_lateral_is_rightward():
    s = apply_command(RobotState((0.0, 0.0), math.pi / 2), Command(0.2, 0.1), C, 1.0)
    # facing +y, right is +x
    assert s.position == pytest.approx((0.2, 0.1), abs=1e-12)


def test_lateral_clamp_exact():
    cmd, clamped = clamp_command(Command(2.0, 0.5), C)
    assert cmd.lateral_velocity == 0.5 and clamped
    s = apply_command(RobotState((0.0, 0.0)), Command(2.0, 0.5), C, 0.1)
    assert s.lateral_velocity == 0.5


def test_forward_clamp():
    assert clamp_command(Command(0.0, 0.0), C) == (Command(0.0, C.v_min), True)
    assert clamp_command(Command(0.0, 7.0), C) == (Command(0.0, C.v_max), True)
    assert clamp_command(Command(0.1, 0.3), C) == (Command(0.1, 0.3), False)


commands = st.builds(Command, st.floats(-5, 5), st.floats(-5, 5))


@given(st.lists(commands, min_size=1, max_size=50), st.floats(-math.pi, math.pi))
def test_crab_heading_constant(cmds, heading):
    s = RobotState((0.0, 0.0), heading)
    for cmd in cmds:
        s = apply_command(s, cmd, C, 0.1, "crab")
    assert s.heading == heading


@given(commands, st.floats(-math.pi, math.pi), st.floats(0.01, 1.0), st.sampled_from(["crab", "realign"]))
def test_displacement_bound(cmd, heading, dt, mode):
    s0 = RobotState((1.0, -2.0), heading)
    s1 = apply_command(s0, cmd, C, dt, mode)
    step = math.hypot(s1.position[0] - s0.position[0], s1.position[1] - s0.position[1])
    assert step <= math.hypot(C.v_max, C.v_side_max) * dt + 1e-12
    assert C.v_min <= s1.forward_speed <= C.v_max
    assert abs(s1.lateral_velocity) <= C.v_side_max


@given(st.lists(commands, min_size=1, max_size=30), st.floats(0.0, 3.0))
def test_realign_slew_bound(cmds, slew):
    c = Constraints(heading_slew_max=slew)
    s = RobotState((0.0, 0.0), 0.3)
    for cmd in cmds:
        n = apply_command(s, cmd, c, 0.1, "realign")
        assert abs(n.heading - s.heading) <= slew * 0.1 + 1e-12
        s = n


def test_realign_turns_toward_travel_direction():
    s = RobotState((0.0, 0.0), 0.0)
    # leftward sideways command: heading should rotate counter-clockwise
    s = apply_command(s, Command(-0.3, 0.3), Constraints(heading_slew_max=10.0), 0.1, "realign")
    assert s.heading == pytest.approx(math.pi / 4)


def test_apply_command_rejects_bad_dt_and_mode():
    with pytest.raises(ValueError):
        apply_command(RobotState((0.0, 0.0)), Command(0, 0.3), C, 0.0)
    with pytest.raises(ValueError):
        apply_command(RobotState((0.0, 0.0)), Command(0, 0.3), C, 0.1, "drift")


def test_constraints_validation():
    with pytest.raises(ValueError):
        Constraints(v_min=1.0, v_max=0.5)
    with pytest.raises(ValueError):
        Constraints(body_radius=0.0)
    with pytest.raises(ValueError):
        Constraints(v_side_max=0.0)


def test_no_contact_at_centre():
    assert check_collision(corridor(), RobotState((10.0, 0.0)), C) is None


def test_contact_near_wall():
    c = check_collision(corridor(), RobotState((10.0, 1.9)), C)
    assert c.wall_index == 0
    assert c.penetration == pytest.approx(0.1)


def brute_distance(seg, p):
    """Minimum distance by dense sampling refined with the vertex distances."""
    (ax, ay), (bx, by) = seg
    ts = np.linspace(0.0, 1.0, 20001)
    d = np.hypot(ax + ts * (bx - ax) - p[0], ay + ts * (by - ay) - p[1]).min()
    return d


def exact_distance(seg, p):
    (ax, ay), (bx, by) = seg
    # closest point from the perpendicular foot, or an endpoint
    ex, ey = bx - ax, by - ay
    t = ((p[0] - ax) * ex + (p[1] - ay) * ey) / (ex * ex + ey * ey)
    if t <= 0:
        return math.dist(p, (ax, ay))
    if t >= 1:
        return math.dist(p, (bx, by))
    cross = abs(ex * (p[1] - ay) - ey * (p[0] - ax))
    return cross / math.hypot(ex, ey)


def test_check_collision_matches_oracle_on_random_queries():
    rng = np.random.default_rng(11)
    walls = []
    while len(walls) < 12:
        a, b = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
        if np.hypot(*(b - a)) > 0.1:
            walls.append(WallSegment(tuple(a), tuple(b)))
    scene = WorldScene(tuple(walls), textures=dict(TEX))
    segs = [(w.p0, w.p1) for w in walls]
    for _ in range(10_000):
        p = tuple(rng.uniform(-6, 6, 2))
        r = float(rng.uniform(0.05, 1.5))
        d = [exact_distance(s, p) for s in segs]
        i = int(np.argmin(d))
        got = check_collision(scene, RobotState(p), Constraints(body_radius=r))
        if d[i] >= r:
            assert got is None
        else:
            assert got.wall_index == i
            assert got.penetration == pytest.approx(r - d[i], abs=1e-12)


def test_exact_distance_agrees_with_sampling():
    rng = np.random.default_rng(12)
    for _ in range(50):
        seg = (tuple(rng.uniform(-3, 3, 2)), tuple(rng.uniform(-3, 3, 2)))
        p = tuple(rng.uniform(-4, 4, 2))
        assert exact_distance(seg, p) == pytest.approx(brute_distance(seg, p), abs=1e-3)
