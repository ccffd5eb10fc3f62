"""Holonomic robot kinematics under velocity constraints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fuzzy import Command
from .world import WorldScene

MODES = ("crab", "realign")


@dataclass(frozen=True)
class RobotState:
    position: tuple[float, float]
    heading: float = 0.0
    forward_speed: float = 0.0
    lateral_velocity: float = 0.0

    @property
    def pose(self) -> tuple[float, float, float]:
        return (self.position[0], self.position[1], self.heading)


@dataclass(frozen=True)
class Constraints:
    v_min: float = 0.1
    v_max: float = 1.0
    v_side_max: float = 0.5
    heading_slew_max: float = 1.0
    body_radius: float = 0.2

    def __post_init__(self):
        if not 0 <= self.v_min < self.v_max:
            raise ValueError("need 0 <= v_min < v_max")
        if not self.v_side_max > 0:
            raise ValueError("v_side_max must be positive")
        if not self.body_radius > 0:
            raise ValueError("body_radius must be positive")
        if self.heading_slew_max < 0:
            raise ValueError("heading_slew_max must be >= 0")


def clamp_command(cmd: Command, constraints: Constraints) -> tuple[Command, bool]:
    fwd = min(max(cmd.forward_speed, constraints.v_min), constraints.v_max)
    lat = min(max(cmd.lateral_velocity, -constraints.v_side_max), constraints.v_side_max)
    clamped = fwd != cmd.forward_speed or lat != cmd.lateral_velocity
    return Command(lat, fwd), clamped


def apply_command(
    state: RobotState, cmd: Command, constraints: Constraints, dt: float, mode: str = "crab"
) -> RobotState:
    """Clamp ``cmd`` and integrate one step.

    Crab mode translates sideways at a fixed heading. Realign mode then
    turns the heading toward the travel direction, at most
    ``heading_slew_max * dt`` per step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if mode not in MODES:
        raise ValueError(f"unknown locomotion mode {mode!r}")
    cmd, _ = clamp_command(cmd, constraints)
    c, s = math.cos(state.heading), math.sin(state.heading)
    # right of heading (c, s) is (s, -c)
    vx = cmd.forward_speed * c + cmd.lateral_velocity * s
    vy = cmd.forward_speed * s - cmd.lateral_velocity * c
    position = (state.position[0] + vx * dt, state.position[1] + vy * dt)
    heading = state.heading
    if mode == "realign" and (vx or vy):
        err = math.atan2(-cmd.lateral_velocity, cmd.forward_speed)
        limit = constraints.heading_slew_max * dt
        heading = state.heading + min(max(err, -limit), limit)
    return RobotState(position, heading, cmd.forward_speed, cmd.lateral_velocity)


@dataclass(frozen=True)
class Contact:
    wall_index: int
    penetration: float


def point_segment_distances(walls: np.ndarray, point) -> np.ndarray:
    px, py = float(point[0]), float(point[1])
    x0, y0 = walls[:, 0], walls[:, 1]
    ex, ey = walls[:, 2] - x0, walls[:, 3] - y0
    t = ((px - x0) * ex + (py - y0) * ey) / (ex * ex + ey * ey)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(x0 + t * ex - px, y0 + t * ey - py)


def check_collision(scene: WorldScene, state: RobotState, constraints: Constraints) -> Optional[Contact]:
    """Deepest wall within ``body_radius`` of the robot centre, if any."""
    if not scene.walls:
        return None
    d = point_segment_distances(scene.wall_array(), state.position)
    i = int(np.argmin(d))
    if d[i] >= constraints.body_radius:
        return None
    return Contact(i, constraints.body_radius - float(d[i]))
