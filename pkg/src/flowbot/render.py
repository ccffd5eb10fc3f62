"""Column ray-cast pinhole camera producing the robot's colour frames."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .world import WorldScene, cast_rays, sample_plane


@dataclass(frozen=True)
class CameraModel:
    hfov: float = math.pi / 2
    width: int = 320
    height: int = 200
    # None means half the scene's wall height.
    eye_height: Optional[float] = None
    # floor/ceiling beyond this depth render at the ambient level
    max_depth: float = 30.0

    def __post_init__(self):
        if not 0 < self.hfov < math.pi:
            raise ValueError("hfov must be in (0, pi)")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")

    @property
    def focal(self) -> float:
        """Focal length in pixels (square pixels)."""
        return (self.width / 2) / math.tan(self.hfov / 2)

    def column_angles(self) -> np.ndarray:
        """Ray angle of each column relative to the heading; left is positive."""
        xc = self.width / 2 - (np.arange(self.width) + 0.5)
        return np.arctan(xc / self.focal)

    def row_offsets(self) -> np.ndarray:
        """Pixel offset of each row centre below the horizon."""
        return (np.arange(self.height) + 0.5) - self.height / 2


@dataclass(frozen=True)
class ColorFrame:
    pixels: np.ndarray  # (height, width, 3), values in [0, 1]
    timestamp: float = 0.0


def render_frame(scene: WorldScene, pose, camera: CameraModel = CameraModel(), timestamp: float = 0.0) -> ColorFrame:
    """Render the view from ``pose = (x, y, heading)``.

    Intensities are quantised to 8-bit levels, like a real video stream.
    """
    x, y, heading = (float(p) for p in pose)
    H, W = camera.height, camera.width
    f = camera.focal
    wall_h = scene.wall_height
    eye = camera.eye_height if camera.eye_height is not None else wall_h / 2

    angles = camera.column_angles()
    ray_angle = heading + angles
    dirs = np.stack([np.cos(ray_angle), np.sin(ray_angle)], axis=1)
    cos_a = np.cos(angles)
    dist, coord, idx = cast_rays(scene.wall_array(), (x, y), dirs)
    zperp = dist * cos_a

    py = camera.row_offsets()[:, None]
    with np.errstate(invalid="ignore"):
        height_at = eye - py * zperp[None, :] / f
    hit = (idx >= 0)[None, :]
    wall_mask = hit & (height_at >= 0.0) & (height_at <= wall_h)

    rgb = np.empty((H, W, 3))
    rgb[...] = scene.ambient_level

    # floor below the horizon, ceiling above; both use the floor texture
    floor_tex = scene.texture(scene.floor_texture_id)
    depth = np.where(py > 0, f * eye / np.where(py > 0, py, 1.0), f * (wall_h - eye) / np.where(py < 0, -py, 1.0))
    depth = np.broadcast_to(depth, (H, W))
    plane_mask = ~wall_mask & (depth <= camera.max_depth)
    if plane_mask.any():
        rr, cc = np.nonzero(plane_mask)
        along = depth[rr, cc] / cos_a[cc]
        px = x + dirs[cc, 0] * along
        pyw = y + dirs[cc, 1] * along
        rgb[rr, cc, :] = sample_plane(floor_tex, px, pyw)[:, None]

    if wall_mask.any():
        for wi in np.unique(idx[idx >= 0]):
            wall = scene.walls[wi]
            m = wall_mask & (idx == wi)[None, :]
            rr, cc = np.nonzero(m)
            tex = scene.texture(wall.texture_id)
            val = sample_plane(tex, coord[cc], height_at[rr, cc]) * wall.brightness
            rgb[rr, cc, :] = val[:, None] * np.asarray(wall.tint)[None, :]

    rgb = np.round(np.clip(rgb, 0.0, 1.0) * 255.0) / 255.0
    return ColorFrame(rgb, timestamp)


def wall_slice_height(scene: WorldScene, pose, camera: CameraModel, wall_index: int) -> int:
    """Number of image rows showing ``wall_index`` in the centre column."""
    frame_idx = _column_wall_rows(scene, pose, camera)
    return int(np.sum(frame_idx == wall_index))


def _column_wall_rows(scene: WorldScene, pose, camera: CameraModel) -> np.ndarray:
    x, y, heading = (float(p) for p in pose)
    f = camera.focal
    eye = camera.eye_height if camera.eye_height is not None else scene.wall_height / 2
    d = np.array([[math.cos(heading), math.sin(heading)]])
    dist, _, idx = cast_rays(scene.wall_array(), (x, y), d)
    if idx[0] < 0:
        return np.full(camera.height, -1)
    h = eye - camera.row_offsets() * dist[0] / f
    return np.where((h >= 0) & (h <= scene.wall_height), idx[0], -1)
