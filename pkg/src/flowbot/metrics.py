"""Trajectory metrics, computed from the logged CSV columns alone."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .world import WorldScene


@dataclass(frozen=True)
class MetricsReport:
    steps: int
    path_length: float
    collisions: int
    contact_steps: int
    deviation_mean: Optional[float] = None
    deviation_max: Optional[float] = None
    final_offset: Optional[float] = None
    progress: Optional[float] = None
    segment_speeds: dict = field(default_factory=dict)
    opening_excursion: Optional[float] = None
    entered_opening: Optional[bool] = None

    def to_dict(self) -> dict:
        return asdict(self)


def axis_coordinates(axis, x: np.ndarray, y: np.ndarray):
    """Arc length along ``axis`` and signed offset (left positive) for points.

    The first and last axis segments extend to infinity so points past the
    ends still get a lateral offset.
    """
    pts = np.asarray(axis, dtype=float)
    best_d = np.full(x.shape, np.inf)
    arc = np.zeros(x.shape)
    offset = np.zeros(x.shape)
    base = 0.0
    nseg = len(pts) - 1
    for i in range(nseg):
        a, b = pts[i], pts[i + 1]
        e = b - a
        length = float(np.hypot(*e))
        ux, uy = e / length
        along = (x - a[0]) * ux + (y - a[1]) * uy
        lo = -np.inf if i == 0 else 0.0
        hi = np.inf if i == nseg - 1 else length
        t = np.clip(along, lo, hi)
        px, py = a[0] + t * ux, a[1] + t * uy
        d = np.hypot(x - px, y - py)
        better = d < best_d
        side = np.sign(ux * (y - a[1]) - uy * (x - a[0]))
        best_d = np.where(better, d, best_d)
        arc = np.where(better, base + t, arc)
        offset = np.where(better, side * d, offset)
        base += length
    return arc, offset


def metrics(log, scene: WorldScene, transient: float = 0.2) -> MetricsReport:
    """Metrics for a run; ``log`` is a TrajectoryLog or a parsed CSV table."""
    table = log.table() if hasattr(log, "table") else log
    x, y = table["x"], table["y"]
    n = len(x)
    if n == 0:
        raise ValueError("empty trajectory log")
    contact = table["contact_wall"] >= 0
    collisions = int(contact[0]) + int(np.sum(contact[1:] & ~contact[:-1]))
    report = dict(
        steps=n,
        path_length=float(np.sum(np.hypot(np.diff(x), np.diff(y)))),
        collisions=collisions,
        contact_steps=int(np.sum(contact)),
    )
    layout = scene.layout
    if layout.axis is not None and len(layout.axis) >= 2:
        arc, offset = axis_coordinates(layout.axis, x, y)
        skip = int(transient * n)
        steady = np.abs(offset[skip:]) if skip < n else np.abs(offset[-1:])
        report.update(
            deviation_mean=float(np.mean(steady)),
            deviation_max=float(np.max(steady)),
            final_offset=float(offset[-1]),
            progress=float(arc[-1]),
        )
        speeds = {}
        for name, s0, s1 in layout.segments:
            inside = (arc >= s0) & (arc <= s1)
            speeds[name] = float(np.mean(table["forward_speed"][inside])) if inside.any() else None
        report["segment_speeds"] = speeds
        if layout.openings:
            excursion, entered = 0.0, False
            for side, s0, s1 in layout.openings:
                excursion = max(excursion, float(np.max(side * offset)))
                if layout.half_width is not None:
                    inside = (arc >= s0) & (arc <= s1)
                    entered |= bool(np.any(side * offset[inside] > layout.half_width))
            report["opening_excursion"] = max(excursion, 0.0)
            report["entered_opening"] = entered if layout.half_width is not None else None
    return MetricsReport(**report)
