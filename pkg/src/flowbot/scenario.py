"""Scenario files: a sectioned ``key = value`` text format.

Grammar::

    file     := (blank | comment | header | pair)*
    comment  := '#' text            (also allowed after a value)
    header   := '[' section ']'
    pair     := key '=' value

Sections may repeat (one ``[wall]`` per wall, in index order). Sections:

``[world]``      floor_texture, ambient, wall_height
``[texture]``    id, kind (checker|stripes|value-noise|uniform), period, contrast, seed
``[wall]``       p0 = x y, p1 = x y, texture, brightness, tint = r g b
``[script]``     wall (index), waypoints = x y; x y; ..., speed, loop, start
``[robot]``      position = x y, heading (rad), mode (crab|realign), v_min, v_max,
                 v_side_max, heading_slew_max, body_radius, hfov_deg, eye_height
``[controller]`` model, rules (prose|literal), w_angle, w_speed, cruise_speed,
                 set.<name> = smf|zmf a b
``[sim]``        dt, steps, flow (hs|lk), alpha, iterations, window, eig_threshold,
                 enhance, seed, scale_factor (number or auto), delay, transient
``[metrics]``    axis = x y; x y; ..., half_width, segment = name s0 s1 (repeatable),
                 opening = left|right s0 s1 (repeatable)

Textures ``floor`` (checker) and ``default`` (value noise) exist unless
redefined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .flow import ENHANCE_MODES, FlowParams
from .fuzzy import ControllerModel, MembershipFunction, build_model
from .render import CameraModel
from .robot import MODES, Constraints, RobotState
from .world import DynamicScript, Layout, ScenarioError, Texture, WallSegment, WorldScene

SECTIONS = ("world", "texture", "wall", "script", "robot", "controller", "sim", "metrics")
BUILTIN_TEXTURES = {
    "floor": Texture("checker", 0.5, 0.6, 0),
    "default": Texture("value-noise", 0.25, 0.9, 1),
}
FLOW_ALIASES = {"hs": "horn_schunck", "lk": "lucas_kanade", "horn_schunck": "horn_schunck", "lucas_kanade": "lucas_kanade"}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    steps: int = 500
    flow: FlowParams = field(default_factory=FlowParams)
    enhance: str = "both"
    controller: ControllerModel = field(default_factory=lambda: build_model("center_flying"))
    mode: str = "crab"
    seed: int = 0
    scale_factor: Optional[float] = None  # None: calibrate on the reference corridor
    delay: int = 0
    transient: float = 0.2
    start: RobotState = field(default_factory=lambda: RobotState((0.0, 0.0)))
    constraints: Constraints = field(default_factory=Constraints)
    camera: CameraModel = field(default_factory=CameraModel)
    dump_frames: bool = False
    dump_flow: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ScenarioError("dt must be positive")
        if self.steps < 1:
            raise ScenarioError("steps must be >= 1")
        if self.delay < 0:
            raise ScenarioError("delay must be >= 0")
        if self.mode not in MODES:
            raise ScenarioError(f"unknown locomotion mode {self.mode!r}")
        if self.enhance not in ENHANCE_MODES:
            raise ScenarioError(f"unknown enhance mode {self.enhance!r}")
        if self.scale_factor is not None and not self.scale_factor > 0:
            raise ScenarioError("scale_factor must be positive")
        if not 0 <= self.transient < 1:
            raise ScenarioError("transient must be in [0, 1)")


@dataclass
class _Section:
    name: str
    line: int
    pairs: list = field(default_factory=list)  # (key, value, line)

    def get(self, key, default=None):
        for k, v, _ in self.pairs:
            if k == key:
                return v
        return default

    def line_of(self, key):
        for k, _, ln in self.pairs:
            if k == key:
                return ln
        return self.line


def _tokenize(text: str, source: str) -> list[_Section]:
    sections: list[_Section] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"{source}:{lineno}: malformed section header {raw.strip()!r}")
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ScenarioError(f"{source}:{lineno}: unknown section [{name}]")
            sections.append(_Section(name, lineno))
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if not sections:
            raise ScenarioError(f"{source}:{lineno}: key outside of any section")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ScenarioError(f"{source}:{lineno}: empty key")
        sections[-1].pairs.append((key, value, lineno))
    return sections


class _Reader:
    """Typed access to one section with line-numbered errors."""

    def __init__(self, section: _Section, source: str, allowed: set[str], prefixes: tuple[str, ...] = ()):
        self.s = section
        self.source = source
        for k, _, ln in section.pairs:
            if k not in allowed and not k.startswith(prefixes):
                raise ScenarioError(f"{source}:{ln}: unknown key {k!r} in [{section.name}]")

    def err(self, key, msg):
        return ScenarioError(f"{self.source}:{self.s.line_of(key)}: [{self.s.name}] {key}: {msg}")

    def has(self, key):
        return self.s.get(key) is not None

    def str(self, key, default=None):
        v = self.s.get(key)
        if v is None:
            if default is None:
                raise self.err(key, "missing required key")
            return default
        return v

    def float(self, key, default=None):
        v = self.s.get(key)
        if v is None:
            if default is None:
                raise self.err(key, "missing required key")
            return default
        try:
            x = float(v)
        except ValueError:
            raise self.err(key, f"not a number: {v!r}") from None
        if not math.isfinite(x):
            raise self.err(key, "must be finite")
        return x

    def int(self, key, default=None):
        x = self.float(key, default)
        if x != int(x):
            raise self.err(key, f"not an integer: {x}")
        return int(x)

    def bool(self, key, default=None):
        v = self.str(key, None if default is None else str(default).lower())
        if v.lower() in ("true", "yes", "1", "on"):
            return True
        if v.lower() in ("false", "no", "0", "off"):
            return False
        raise self.err(key, f"not a boolean: {v!r}")

    def vec(self, key, n, default=None):
        v = self.s.get(key)
        if v is None:
            if default is None:
                raise self.err(key, "missing required key")
            return default
        parts = v.replace(",", " ").split()
        try:
            out = tuple(float(p) for p in parts)
        except ValueError:
            raise self.err(key, f"expected {n} numbers, got {v!r}") from None
        if len(out) != n:
            raise self.err(key, f"expected {n} numbers, got {v!r}")
        return out

    def points(self, key):
        v = self.str(key)
        pts = []
        for chunk in v.split(";"):
            parts = chunk.replace(",", " ").split()
            if not parts:
                continue
            try:
                x, y = (float(p) for p in parts)
            except ValueError:
                raise self.err(key, f"expected 'x y' points separated by ';', got {chunk.strip()!r}") from None
            pts.append((x, y))
        if not pts:
            raise self.err(key, "no points given")
        return tuple(pts)


def parse_scenario(text: str, source: str = "<scenario>") -> tuple[WorldScene, SimConfig]:
    sections = _tokenize(text, source)
    by_name: dict[str, list[_Section]] = {}
    for s in sections:
        by_name.setdefault(s.name, []).append(s)
    for single in ("world", "robot", "controller", "sim", "metrics"):
        if len(by_name.get(single, [])) > 1:
            raise ScenarioError(f"{source}:{by_name[single][1].line}: section [{single}] given twice")

    def one(name, allowed, prefixes=()):
        secs = by_name.get(name)
        return _Reader(secs[0] if secs else _Section(name, 0), source, allowed, prefixes)

    textures = dict(BUILTIN_TEXTURES)
    for s in by_name.get("texture", []):
        r = _Reader(s, source, {"id", "kind", "period", "contrast", "seed"})
        tid = r.str("id")
        try:
            textures[tid] = Texture(r.str("kind"), r.float("period", 0.5), r.float("contrast", 0.8), r.int("seed", 0))
        except ScenarioError as e:
            raise ScenarioError(f"{source}:{s.line}: texture {tid!r}: {e}") from None

    walls = []
    for s in by_name.get("wall", []):
        r = _Reader(s, source, {"p0", "p1", "texture", "brightness", "tint"})
        walls.append(
            WallSegment(
                r.vec("p0", 2),
                r.vec("p1", 2),
                r.str("texture", "default"),
                r.float("brightness", 1.0),
                r.vec("tint", 3, (1.0, 1.0, 1.0)),
            )
        )

    scripts = []
    for s in by_name.get("script", []):
        r = _Reader(s, source, {"wall", "waypoints", "speed", "loop", "start"})
        scripts.append(
            DynamicScript(r.int("wall"), r.points("waypoints"), r.float("speed"), r.bool("loop", False), r.float("start", 0.0))
        )

    w = one("world", {"floor_texture", "ambient", "wall_height"})
    m = one("metrics", {"axis", "half_width", "segment", "opening"})
    layout = Layout(
        axis=m.points("axis") if m.has("axis") else None,
        half_width=m.float("half_width") if m.has("half_width") else None,
        segments=tuple(_span(m, v, ln, named=True) for k, v, ln in m.s.pairs if k == "segment"),
        openings=tuple(_span(m, v, ln, named=False) for k, v, ln in m.s.pairs if k == "opening"),
    )
    try:
        scene = WorldScene(
            walls=tuple(walls),
            scripts=tuple(scripts),
            textures=textures,
            floor_texture_id=w.str("floor_texture", "floor"),
            ambient_level=w.float("ambient", 0.3),
            wall_height=w.float("wall_height", 2.5),
            layout=layout,
        )
    except ScenarioError as e:
        raise ScenarioError(f"{source}: {e}") from None

    config = _parse_config(one, source)
    return scene, config


def _span(reader: _Reader, value: str, line: int, named: bool):
    parts = value.split()
    where = f"{reader.source}:{line}: [metrics]"
    if len(parts) != 3:
        raise ScenarioError(f"{where} expected 'name s0 s1', got {value!r}")
    try:
        s0, s1 = float(parts[1]), float(parts[2])
    except ValueError:
        raise ScenarioError(f"{where} span bounds must be numbers: {value!r}") from None
    if not s0 < s1:
        raise ScenarioError(f"{where} span needs s0 < s1: {value!r}")
    if named:
        return (parts[0], s0, s1)
    side = {"left": 1, "right": -1}.get(parts[0])
    if side is None:
        raise ScenarioError(f"{where} opening side must be left or right: {value!r}")
    return (side, s0, s1)


def _parse_config(one, source) -> SimConfig:
    rb = one(
        "robot",
        {"position", "heading", "mode", "v_min", "v_max", "v_side_max", "heading_slew_max", "body_radius", "hfov_deg", "eye_height"},
    )
    ct = one("controller", {"model", "rules", "w_angle", "w_speed", "cruise_speed"}, ("set.",))
    sm = one(
        "sim",
        {"dt", "steps", "flow", "alpha", "iterations", "window", "eig_threshold", "enhance", "seed", "scale_factor", "delay", "transient"},
    )
    try:
        constraints = Constraints(
            rb.float("v_min", 0.1),
            rb.float("v_max", 1.0),
            rb.float("v_side_max", 0.5),
            rb.float("heading_slew_max", 1.0),
            rb.float("body_radius", 0.2),
        )
        camera = CameraModel(
            hfov=math.radians(rb.float("hfov_deg", 90.0)),
            eye_height=rb.float("eye_height") if rb.has("eye_height") else None,
        )
        sets = {}
        for k, v, ln in ct.s.pairs:
            if k.startswith("set."):
                parts = v.split()
                if len(parts) != 3:
                    raise ScenarioError(f"{source}:{ln}: [controller] {k}: expected 'smf|zmf a b'")
                sets[k[4:]] = MembershipFunction(parts[0], float(parts[1]), float(parts[2]))
        model = build_model(
            ct.str("model", "center_flying"),
            ct.str("rules", "prose"),
            sets,
            w_angle=ct.float("w_angle", 0.007),
            w_speed=ct.float("w_speed", 0.03),
            cruise_speed=ct.float("cruise_speed", 0.35),
        )
        flow_name = sm.str("flow", "hs")
        if flow_name not in FLOW_ALIASES:
            raise sm.err("flow", f"unknown flow algorithm {flow_name!r}")
        flow = FlowParams(
            algorithm=FLOW_ALIASES[flow_name],
            alpha=sm.float("alpha", 15.0),
            iterations=sm.int("iterations", 100),
            window=sm.int("window", 5),
            eig_threshold=sm.float("eig_threshold", 1e-4),
        )
        scale_raw = sm.str("scale_factor", "auto")
        scale_factor = None if scale_raw == "auto" else sm.float("scale_factor")
        return SimConfig(
            dt=sm.float("dt", 0.1),
            steps=sm.int("steps", 500),
            flow=flow,
            enhance=sm.str("enhance", "both"),
            controller=model,
            mode=rb.str("mode", "crab"),
            seed=sm.int("seed", 0),
            scale_factor=scale_factor,
            delay=sm.int("delay", 0),
            transient=sm.float("transient", 0.2),
            start=RobotState(rb.vec("position", 2, (0.0, 0.0)), rb.float("heading", 0.0)),
            constraints=constraints,
            camera=camera,
        )
    except ScenarioError:
        raise
    except ValueError as e:
        raise ScenarioError(f"{source}: {e}") from None


def load_scenario(path) -> tuple[WorldScene, SimConfig]:
    """Load a scenario file; bundled scenarios may be named without a path."""
    p = resolve_scenario(path)
    return parse_scenario(p.read_text(), str(path))


def bundled_dir() -> Path:
    return Path(str(resources.files("flowbot") / "scenarios"))


def bundled_names() -> list[str]:
    return sorted(p.stem for p in bundled_dir().glob("*.scn"))


def resolve_scenario(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    candidate = bundled_dir() / (p.stem + ".scn")
    if p.parent == Path(".") and candidate.exists():
        return candidate
    raise FileNotFoundError(f"scenario file not found: {path}")


def _num(x: float) -> str:
    return repr(float(x))


def serialize_scene(scene: WorldScene) -> str:
    """Scene sections of a scenario file; ``parse_scenario`` inverts this."""
    out = ["[world]", f"floor_texture = {scene.floor_texture_id}", f"ambient = {_num(scene.ambient_level)}",
           f"wall_height = {_num(scene.wall_height)}", ""]
    for tid, t in scene.textures.items():
        out += ["[texture]", f"id = {tid}", f"kind = {t.kind}", f"period = {_num(t.period)}",
                f"contrast = {_num(t.contrast)}", f"seed = {t.seed}", ""]
    for w in scene.walls:
        out += ["[wall]", f"p0 = {_num(w.p0[0])} {_num(w.p0[1])}", f"p1 = {_num(w.p1[0])} {_num(w.p1[1])}",
                f"texture = {w.texture_id}", f"brightness = {_num(w.brightness)}",
                "tint = " + " ".join(_num(c) for c in w.tint), ""]
    for s in scene.scripts:
        pts = "; ".join(f"{_num(x)} {_num(y)}" for x, y in s.waypoints)
        out += ["[script]", f"wall = {s.wall_index}", f"waypoints = {pts}", f"speed = {_num(s.speed)}",
                f"loop = {str(s.loop).lower()}", f"start = {_num(s.start)}", ""]
    lay = scene.layout
    if lay.axis or lay.half_width is not None or lay.segments or lay.openings:
        out.append("[metrics]")
        if lay.axis:
            out.append("axis = " + "; ".join(f"{_num(x)} {_num(y)}" for x, y in lay.axis))
        if lay.half_width is not None:
            out.append(f"half_width = {_num(lay.half_width)}")
        out += [f"segment = {n} {_num(a)} {_num(b)}" for n, a, b in lay.segments]
        out += [f"opening = {'left' if side > 0 else 'right'} {_num(a)} {_num(b)}" for side, a, b in lay.openings]
        out.append("")
    return "\n".join(out)


def with_overrides(config: SimConfig, **kw) -> SimConfig:
    return replace(config, **kw)
