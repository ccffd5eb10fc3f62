"""Closed loop: render, preprocess, flow, aggregate, infer, actuate, step world."""

from __future__ import annotations

import csv
import functools
import io
import logging
import math
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import median
from typing import Callable, Optional

import numpy as np

from . import dumps
from .aggregate import RegionFlow, aggregate, segment, trimmed_mean
from .flow import FlowParams, compute_flow, enhance, to_grayscale
from .fuzzy import Command, denormalize, infer, neutral_command, neutral_value
from .render import CameraModel, render_frame
from .robot import RobotState, apply_command, check_collision, clamp_command
from .scenario import SimConfig, load_scenario
from .world import WorldScene, step_world

log = logging.getLogger(__name__)

REFERENCE_SCENARIO = "straight_corridor"
CALIBRATION_PAIRS = 10
NOMINAL_FLOW = 5.0

COLUMNS = (
    "step", "t", "x", "y", "heading",
    "raw_l", "raw_m", "raw_r", "l", "m", "r", "l_minus_r", "l_plus_r",
    "angle_out", "speed_out",
    "cmd_lateral", "cmd_forward", "lateral_velocity", "forward_speed",
    "clamped", "neutral", "angle_inactive", "speed_inactive",
    "contact_wall", "penetration",
)


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    x: float
    y: float
    heading: float
    region: Optional[RegionFlow]
    angle_out: float
    speed_out: float
    commanded: Command
    applied: Command
    clamped: bool
    neutral: bool
    angle_inactive: bool
    speed_inactive: bool
    contact_wall: int = -1
    penetration: float = 0.0

    def row(self) -> list[str]:
        r = self.region
        raw = (r.raw_l, r.raw_m, r.raw_r, r.l, r.m, r.r, r.l_minus_r, r.l_plus_r) if r else (0.0,) * 8
        return [
            str(self.step), *map(_fmt, (self.t, self.x, self.y, self.heading, *raw,
                                      self.angle_out, self.speed_out,
                                      self.commanded.lateral_velocity, self.commanded.forward_speed,
                                      self.applied.lateral_velocity, self.applied.forward_speed)),
            str(int(self.clamped)), str(int(self.neutral)), str(int(self.angle_inactive)),
            str(int(self.speed_inactive)), str(self.contact_wall), _fmt(self.penetration),
        ]


def _fmt(x: float) -> str:
    return f"{float(x):.9g}"


@dataclass
class TrajectoryLog:
    records: list
    dt: float

    def __len__(self):
        return len(self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for rec in self.records:
            w.writerow(rec.row())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv())

    def table(self) -> dict[str, np.ndarray]:
        """Columns as parsed back from the CSV text (9 significant digits)."""
        return parse_csv(self.to_csv())


def parse_csv(text: str) -> dict[str, np.ndarray]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ValueError("not a trajectory CSV (header mismatch)")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(COLUMNS))
    return {name: body[:, i] for i, name in enumerate(COLUMNS)}


def read_csv(path) -> dict[str, np.ndarray]:
    return parse_csv(Path(path).read_text())


# --- calibration -------------------------------------------------------------


def side_flow_samples(scene: WorldScene, config: SimConfig, speed: float, pairs: int = CALIBRATION_PAIRS) -> list[float]:
    """Raw left/right trimmed means while gliding along the corridor axis."""
    axis = scene.layout.axis
    if axis is None or len(axis) < 2:
        raise CalibrationError("calibration needs a scenario with a declared corridor axis")
    (x0, y0), (x1, y1) = axis[0], axis[1]
    heading = math.atan2(y1 - y0, x1 - x0)
    c, s = math.cos(heading), math.sin(heading)
    scene = scene.with_seed(config.seed)
    start = 1.0
    step = speed * config.dt
    samples = []
    prev = None
    for k in range(pairs + 1):
        d = start + k * step
        pose = (x0 + d * c, y0 + d * s, heading)
        frame = enhance(to_grayscale(render_frame(scene, pose, config.camera)), config.enhance)
        if prev is not None:
            left, _, right = segment(compute_flow(prev, frame, config.flow))
            samples += [trimmed_mean(left), trimmed_mean(right)]
        prev = frame
    return samples


def calibrate_scale(scene: WorldScene, config: SimConfig, cruise_speed: Optional[float] = None,
                    pairs: int = CALIBRATION_PAIRS) -> float:
    """Scale factor mapping the median side-region flow to mid-universe (5)."""
    speed = config.controller.cruise_speed if cruise_speed is None else cruise_speed
    if pairs < 10:
        raise CalibrationError("calibration needs at least 10 frame pairs")
    med = median(side_flow_samples(scene, config, speed, pairs))
    if not med > 1e-12:
        raise CalibrationError(
            "median side flow is zero: the reference world has no visible features "
            "(uniform surfaces or dark walls give no optical flow)"
        )
    return NOMINAL_FLOW / med


@functools.lru_cache(maxsize=32)
def _reference_scale(flow: FlowParams, enhance_mode: str, camera: CameraModel, dt: float, seed: int, speed: float) -> float:
    scene, ref_config = load_scenario(REFERENCE_SCENARIO)
    config = replace(ref_config, flow=flow, enhance=enhance_mode, camera=camera, dt=dt, seed=seed)
    return calibrate_scale(scene, config, speed)


def resolve_scale(config: SimConfig) -> float:
    if config.scale_factor is not None:
        return config.scale_factor
    return _reference_scale(config.flow, config.enhance, config.camera, config.dt, config.seed,
                            config.controller.cruise_speed)


# --- the loop ----------------------------------------------------------------


def run(
    scene: WorldScene,
    config: SimConfig,
    out_dir=None,
    frame_hook: Optional[Callable[[int, np.ndarray], np.ndarray]] = None,
) -> TrajectoryLog:
    """Run the closed loop for ``config.steps`` frames.

    ``frame_hook(step, gray)`` may replace the preprocessed frame of a step
    (used to probe loop causality).
    """
    scale = resolve_scale(config)
    scene = scene.with_seed(config.seed)
    model = config.controller
    state = replace(config.start, forward_speed=model.cruise_speed, lateral_velocity=0.0)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None and (config.dump_frames or config.dump_flow):
        out.mkdir(parents=True, exist_ok=True)

    pending: deque = deque()
    records = []
    prev = None
    for k in range(config.steps):
        t = k * config.dt
        color = render_frame(scene, state.pose, config.camera, t)
        gray = enhance(to_grayscale(color), config.enhance)
        if frame_hook is not None:
            gray = replace(gray, pixels=frame_hook(k, gray.pixels))
        if out is not None and config.dump_frames:
            dumps.write_ppm(out / f"color_{k:06d}.ppm", color.pixels)
            dumps.write_pgm(out / f"frame_{k:06d}.pgm", gray.pixels)

        if prev is None:
            region = None
            outputs = {name: neutral_value(name) for name in ("angle", "speed")}
            inactive = ()
            cmd = neutral_command(model)
        else:
            flow = compute_flow(prev, gray, config.flow)
            if out is not None and config.dump_flow:
                dumps.write_flo2(out / f"flow_{k:06d}.flo2", flow)
            region = aggregate(flow, scale)
            inputs = {"l_minus_r": region.l_minus_r, "l_plus_r": region.l_plus_r, "l": region.l, "r": region.r}
            result = infer(model, {n: inputs[n] for n in model.inputs})
            outputs = {"angle": result.outputs.get("angle", 0.0), "speed": result.outputs.get("speed", neutral_value("speed"))}
            inactive = result.inactive
            cmd = denormalize(result.outputs, model)

        pending.append(cmd)
        commanded = pending.popleft() if len(pending) > config.delay else neutral_command(model)
        applied, clamped = clamp_command(commanded, config.constraints)
        if clamped:
            log.debug("step %d: command clamped from %s to %s", k, commanded, applied)
        contact = check_collision(scene, state, config.constraints)
        records.append(
            StepRecord(
                step=k, t=t, x=state.position[0], y=state.position[1], heading=state.heading,
                region=region, angle_out=outputs["angle"], speed_out=outputs["speed"],
                commanded=commanded, applied=applied, clamped=clamped, neutral=prev is None,
                angle_inactive="angle" in inactive, speed_inactive="speed" in inactive,
                contact_wall=contact.wall_index if contact else -1,
                penetration=contact.penetration if contact else 0.0,
            )
        )
        state = apply_command(state, commanded, config.constraints, config.dt, config.mode)
        scene = step_world(scene, t, config.dt)
        prev = gray
    return TrajectoryLog(records, config.dt)
