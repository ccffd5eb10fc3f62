"""Static geometry, procedural textures and scripted dynamics of a test world.

The world is 2.5-D: vertical wall segments extruded from a flat floor to a
flat ceiling. Walls carry a texture and a brightness; scripted walls
translate along a waypoint path (no rotation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

Point = tuple[float, float]

TEXTURE_KINDS = ("checker", "stripes", "value-noise", "uniform")
MIN_WALL_LENGTH = 1e-9


class ScenarioError(ValueError):
    """Raised for scenario parse or validation problems."""


@dataclass(frozen=True)
class Texture:
    kind: str = "checker"
    period: float = 0.5
    contrast: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TEXTURE_KINDS:
            raise ScenarioError(f"unknown texture kind {self.kind!r}")
        if self.kind == "uniform" and self.contrast != 0.0:
            object.__setattr__(self, "contrast", 0.0)
        if not self.period > 0:
            raise ScenarioError(f"texture period must be positive, got {self.period}")
        if not 0.0 <= self.contrast <= 1.0:
            raise ScenarioError(f"texture contrast must be in [0,1], got {self.contrast}")


@dataclass(frozen=True)
class WallSegment:
    p0: Point
    p1: Point
    texture_id: str = "default"
    brightness: float = 1.0
    tint: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def translated(self, dx: float, dy: float) -> "WallSegment":
        return replace(
            self,
            p0=(self.p0[0] + dx, self.p0[1] + dy),
            p1=(self.p1[0] + dx, self.p1[1] + dy),
        )


@dataclass(frozen=True)
class DynamicScript:
    """Moves one wall along a polyline of displacements.

    The wall geometry as declared is its position at ``start``; the
    displacement applied at time t is ``path(t) - waypoints[0]``.
    """

    wall_index: int
    waypoints: tuple[Point, ...]
    speed: float
    loop: bool = False
    start: float = 0.0

    def _legs(self) -> list[tuple[Point, Point]]:
        pts = list(self.waypoints)
        if self.loop and len(pts) > 1:
            pts.append(pts[0])
        return list(zip(pts[:-1], pts[1:]))

    def path_position(self, t: float) -> Point:
        legs = self._legs()
        if not legs:
            return self.waypoints[0]
        lengths = [math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in legs]
        total = sum(lengths)
        if total == 0.0:
            return self.waypoints[0]
        arc = self.speed * max(0.0, t - self.start)
        if self.loop:
            arc = math.fmod(arc, total)
        elif arc >= total:
            return self.waypoints[-1]
        for (a, b), seg in zip(legs, lengths):
            if arc <= seg and seg > 0.0:
                f = arc / seg
                return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
            arc -= seg
        return legs[-1][1]

    def displacement(self, t: float) -> Point:
        x, y = self.path_position(t)
        x0, y0 = self.waypoints[0]
        return (x - x0, y - y0)


@dataclass(frozen=True)
class Layout:
    """Measurement annotations: corridor axis, speed spans and openings.

    Spans are arc-length intervals (m) along the axis polyline. Openings
    carry a side, +1 for left of the axis direction and -1 for right.
    """

    axis: Optional[tuple[Point, ...]] = None
    half_width: Optional[float] = None
    segments: tuple[tuple[str, float, float], ...] = ()
    openings: tuple[tuple[int, float, float], ...] = ()


@dataclass(frozen=True)
class WorldScene:
    walls: tuple[WallSegment, ...]
    scripts: tuple[DynamicScript, ...] = ()
    textures: dict = field(default_factory=dict)
    floor_texture_id: str = "floor"
    ambient_level: float = 0.3
    wall_height: float = 2.5
    layout: Layout = field(default_factory=Layout)

    def __post_init__(self):
        validate_scene(self)

    def texture(self, texture_id: str) -> Texture:
        return self.textures[texture_id]

    def with_seed(self, seed: int) -> "WorldScene":
        """Return a copy whose texture seeds are mixed with a run seed."""
        if seed == 0:
            return self
        textures = {k: replace(t, seed=t.seed + 1_000_003 * seed) for k, t in self.textures.items()}
        return replace(self, textures=textures)

    def wall_array(self) -> np.ndarray:
        """Walls as an (n, 4) array of x0, y0, x1, y1."""
        return np.array([[w.p0[0], w.p0[1], w.p1[0], w.p1[1]] for w in self.walls], dtype=float).reshape(-1, 4)


def validate_scene(scene: WorldScene) -> None:
    textures = scene.textures
    if scene.floor_texture_id not in textures:
        raise ScenarioError(f"floor texture {scene.floor_texture_id!r} is not defined")
    if not 0.0 <= scene.ambient_level <= 1.0:
        raise ScenarioError(f"ambient level must be in [0,1], got {scene.ambient_level}")
    if not scene.wall_height > 0:
        raise ScenarioError("wall height must be positive")
    for i, w in enumerate(scene.walls):
        if w.length <= MIN_WALL_LENGTH:
            raise ScenarioError(f"wall {i} has zero length")
        if not 0.0 <= w.brightness <= 1.0:
            raise ScenarioError(f"wall {i} brightness {w.brightness} outside [0,1]")
        if w.texture_id not in textures:
            raise ScenarioError(f"wall {i} references undefined texture {w.texture_id!r}")
        if any(not 0.0 <= c <= 1.0 for c in w.tint):
            raise ScenarioError(f"wall {i} tint outside [0,1]")
    for j, s in enumerate(scene.scripts):
        if not 0 <= s.wall_index < len(scene.walls):
            raise ScenarioError(
                f"script {j} references wall_index {s.wall_index} but the scene has {len(scene.walls)} walls"
            )
        if s.speed < 0:
            raise ScenarioError(f"script {j} has negative speed")
        if not s.waypoints:
            raise ScenarioError(f"script {j} has no waypoints")


def step_world(scene: WorldScene, t: float, dt: float) -> WorldScene:
    """Advance scripted walls from time t to t + dt."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not scene.scripts:
        return scene
    walls = list(scene.walls)
    for script in scene.scripts:
        ax, ay = script.displacement(t)
        bx, by = script.displacement(t + dt)
        dx, dy = bx - ax, by - ay
        if dx or dy:
            walls[script.wall_index] = walls[script.wall_index].translated(dx, dy)
    return replace(scene, walls=tuple(walls))


# --- ray queries -----------------------------------------------------------


@dataclass(frozen=True)
class Hit:
    distance: float
    texture_coord: float
    wall_index: int


def cast_rays(walls: np.ndarray, origin, directions: np.ndarray):
    """Nearest wall hit for many rays from one origin.

    Returns ``(distance, texture_coord, wall_index)`` arrays; rays that hit
    nothing get ``inf`` distance and index -1. Ties go to the lowest index.
    """
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    n = directions.shape[0]
    if len(walls) == 0:
        return np.full(n, np.inf), np.zeros(n), np.full(n, -1)
    ox, oy = float(origin[0]), float(origin[1])
    x0, y0 = walls[:, 0], walls[:, 1]
    ex, ey = walls[:, 2] - x0, walls[:, 3] - y0
    dx, dy = directions[:, 0:1], directions[:, 1:2]
    # origin + t*d = p0 + s*e
    denom = dx * ey - dy * ex
    wx, wy = x0 - ox, y0 - oy
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = (wx * ey - wy * ex) / denom
        s = (wx * dy - wy * dx) / denom
    valid = (denom != 0.0) & (t > 1e-12) & (s >= 0.0) & (s <= 1.0)
    t = np.where(valid, t, np.inf)
    idx = np.argmin(t, axis=1)
    rows = np.arange(n)
    dist = t[rows, idx]
    lengths = np.hypot(ex, ey)
    hit = np.isfinite(dist)
    coord = np.where(hit, s[rows, idx] * lengths[idx], 0.0)
    idx = np.where(hit, idx, -1)
    return dist, coord, idx


def cast_ray(scene: WorldScene, origin: Point, direction: Point) -> Optional[Hit]:
    """Nearest intersection of a ray with any wall, or None."""
    norm = math.hypot(direction[0], direction[1])
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    dist, coord, idx = cast_rays(scene.wall_array(), origin, np.array([direction], dtype=float))
    if idx[0] < 0:
        return None
    return Hit(float(dist[0]), float(coord[0]), int(idx[0]))


# --- textures ----------------------------------------------------------------


def _hash01(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Stateless lattice hash to [0, 1) (splitmix64 finaliser)."""
    with np.errstate(over="ignore"):
        h = ix.astype(np.int64).view(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
        h ^= iy.astype(np.int64).view(np.uint64) * np.uint64(0xC2B2AE3D27D4EB4F)
        h ^= np.uint64((seed * 0x165667B19E3779F9) & 0xFFFFFFFFFFFFFFFF)
        h ^= h >> np.uint64(33)
        h *= np.uint64(0xFF51AFD7ED558CCD)
        h ^= h >> np.uint64(33)
        h *= np.uint64(0xC4CEB9FE1A85EC53)
        h ^= h >> np.uint64(33)
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _value_noise(x: np.ndarray, y: np.ndarray, seed: int) -> np.ndarray:
    fx, fy = np.floor(x), np.floor(y)
    ix, iy = fx.astype(np.int64), fy.astype(np.int64)
    tx, ty = x - fx, y - fy
    sx = tx * tx * (3.0 - 2.0 * tx)
    sy = ty * ty * (3.0 - 2.0 * ty)
    v00 = _hash01(ix, iy, seed)
    v10 = _hash01(ix + 1, iy, seed)
    v01 = _hash01(ix, iy + 1, seed)
    v11 = _hash01(ix + 1, iy + 1, seed)
    a = v00 + sx * (v10 - v00)
    b = v01 + sx * (v11 - v01)
    return a + sy * (b - a)


def sample_plane(tex: Texture, s, t) -> np.ndarray:
    """Texture intensity at planar coordinates (s, t) in metres."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast(s, t).shape
    if tex.kind == "uniform":
        return np.full(shape, 0.5)
    c = tex.contrast
    if tex.kind == "checker":
        parity = (np.floor(s / tex.period) + np.floor(t / tex.period)) % 2.0
        return 0.5 + 0.5 * c * (2.0 * parity - 1.0)
    if tex.kind == "stripes":
        parity = np.floor(s / tex.period) % 2.0
        return np.broadcast_to(0.5 + 0.5 * c * (2.0 * parity - 1.0), shape).copy()
    n = _value_noise(s / tex.period, t / tex.period, tex.seed)
    return np.clip(0.5 + c * (n - 0.5), 0.0, 1.0)


def sample_texture(tex: Texture, coord, height_frac, wall_height: float = 2.5):
    """Wall texture intensity at ``coord`` metres along the wall.

    ``height_frac`` is the fraction of wall height; texture cells are square
    in metres so the vertical coordinate is scaled by ``wall_height``.
    """
    out = sample_plane(tex, coord, np.asarray(height_frac, dtype=float) * wall_height)
    return float(out) if out.ndim == 0 else out
