"""Mamdani fuzzy inference with spline (smf/zmf) membership functions.

Three controller models are provided:

* ``center_flying``: balance left/right flow through ``l_minus_r``.
* ``center_flying_speed``: the same plus forward speed from ``l_plus_r``.
* ``turn_at_threshold``: react only when one side's flow is high.

Inference is min-AND, max-aggregation, centroid defuzzification over a
101-point grid of each output universe.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

log = logging.getLogger(__name__)

MODEL_IDS = ("center_flying", "center_flying_speed", "turn_at_threshold")
RULE_VARIANTS = ("prose", "literal")
GRID_POINTS = 101
SPEED_MID = 5.0


@dataclass(frozen=True)
class MembershipFunction:
    kind: str
    a: float
    b: float

    def __post_init__(self):
        if self.kind not in ("smf", "zmf"):
            raise ValueError(f"unknown membership kind {self.kind!r}")
        if not self.a < self.b:
            raise ValueError(f"membership breakpoints need a < b, got {self.a}, {self.b}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.a, self.b
        mid = (a + b) / 2
        w = b - a
        if self.kind == "smf":
            lo, rise, fall, hi = 0.0, 2 * ((x - a) / w) ** 2, 1 - 2 * ((x - b) / w) ** 2, 1.0
        else:
            lo, rise, fall, hi = 1.0, 1 - 2 * ((x - a) / w) ** 2, 2 * ((x - b) / w) ** 2, 0.0
        out = np.where(x <= a, lo, np.where(x <= mid, rise, np.where(x <= b, fall, hi)))
        return float(out) if out.ndim == 0 else out

    def __str__(self):
        return f"{self.kind} {self.a:g} {self.b:g}"


def membership(mf: MembershipFunction, x):
    return mf(x)


@dataclass(frozen=True)
class Variable:
    lo: float
    hi: float
    sets: Mapping[str, MembershipFunction]

    def grid(self) -> np.ndarray:
        i = np.arange(GRID_POINTS)
        return self.lo + (self.hi - self.lo) * i / (GRID_POINTS - 1)


@dataclass(frozen=True)
class FuzzyRule:
    antecedents: tuple[tuple[str, str, bool], ...]
    consequent: tuple[str, str]

    def __str__(self):
        parts = [f"{name} is {'not ' if neg else ''}{s}" for name, s, neg in self.antecedents]
        return f"if {' and '.join(parts)} then {self.consequent[0]} is {self.consequent[1]}"


DEFAULT_SETS = {
    "L_Close": MembershipFunction("smf", 1.0, 6.0),
    "R_Close": MembershipFunction("zmf", -6.0, -1.0),
    "high_flow": MembershipFunction("smf", 3.0, 7.0),
    "low_flow": MembershipFunction("zmf", 3.0, 7.0),
    "high": MembershipFunction("smf", 6.0, 9.0),
    "turn_right": MembershipFunction("smf", 2.0, 8.0),
    "turn_left": MembershipFunction("zmf", -8.0, -2.0),
    "fast": MembershipFunction("smf", 4.0, 8.0),
    "slow": MembershipFunction("zmf", 2.0, 6.0),
}

_VARIABLE_SETS = {
    "l_minus_r": (-10.0, 10.0, ("L_Close", "R_Close")),
    "l_plus_r": (0.0, 10.0, ("low_flow", "high_flow")),
    "l": (0.0, 10.0, ("high",)),
    "r": (0.0, 10.0, ("high",)),
    "angle": (-10.0, 10.0, ("turn_left", "turn_right")),
    "speed": (0.0, 10.0, ("slow", "fast")),
}


@dataclass(frozen=True)
class ControllerModel:
    id: str
    inputs: Mapping[str, Variable]
    outputs: Mapping[str, Variable]
    rules: tuple[FuzzyRule, ...]
    w_angle: float = 0.007
    w_speed: float = 0.03
    cruise_speed: float = 0.35
    variant: str = "prose"

    def __post_init__(self):
        for rule in self.rules:
            for name, s, _ in rule.antecedents:
                if name not in self.inputs or s not in self.inputs[name].sets:
                    raise ValueError(f"rule references unknown input set {name}.{s}")
            name, s = rule.consequent
            if name not in self.outputs or s not in self.outputs[name].sets:
                raise ValueError(f"rule references unknown output set {name}.{s}")

    @property
    def has_speed(self) -> bool:
        return "speed" in self.outputs


def _rule(*antecedents, then):
    return FuzzyRule(tuple((a[0], a[1], len(a) > 2 and a[2] == "not") for a in antecedents), then)


def _rule_table(model_id: str, variant: str) -> tuple[FuzzyRule, ...]:
    steer = (
        _rule(("l_minus_r", "R_Close"), then=("angle", "turn_left")),
        _rule(("l_minus_r", "L_Close"), then=("angle", "turn_right")),
    )
    if model_id == "center_flying":
        return steer
    if model_id == "center_flying_speed":
        if variant == "literal":
            # pairing as enumerated: low total flow -> slow, high -> fast
            speed = (
                _rule(("l_plus_r", "low_flow"), then=("speed", "slow")),
                _rule(("l_plus_r", "high_flow"), then=("speed", "fast")),
            )
        else:
            # slow down when total flow is high
            speed = (
                _rule(("l_plus_r", "high_flow"), then=("speed", "slow")),
                _rule(("l_plus_r", "low_flow"), then=("speed", "fast")),
            )
        return steer + speed
    return (
        _rule(("l", "high"), ("r", "high", "not"), then=("angle", "turn_right")),
        _rule(("l", "high", "not"), ("r", "high"), then=("angle", "turn_left")),
        _rule(("l", "high"), ("r", "high"), then=("speed", "slow")),
        _rule(("l", "high", "not"), ("r", "high", "not"), then=("speed", "fast")),
    )


_MODEL_VARIABLES = {
    "center_flying": (("l_minus_r",), ("angle",)),
    "center_flying_speed": (("l_minus_r", "l_plus_r"), ("angle", "speed")),
    "turn_at_threshold": (("l", "r"), ("angle", "speed")),
}


def build_model(
    model_id: str,
    variant: str = "prose",
    sets: Mapping[str, MembershipFunction] | None = None,
    w_angle: float = 0.007,
    w_speed: float = 0.03,
    cruise_speed: float = 0.35,
) -> ControllerModel:
    """Assemble one of the three controller models, with optional set overrides."""
    if model_id not in MODEL_IDS:
        raise ValueError(f"unknown controller model {model_id!r}")
    if variant not in RULE_VARIANTS:
        raise ValueError(f"unknown rule variant {variant!r}")
    table = dict(DEFAULT_SETS)
    for name, mf in (sets or {}).items():
        if name not in table:
            raise ValueError(f"unknown fuzzy set {name!r}")
        table[name] = mf

    def var(name):
        lo, hi, names = _VARIABLE_SETS[name]
        return Variable(lo, hi, {n: table[n] for n in names})

    in_names, out_names = _MODEL_VARIABLES[model_id]
    return ControllerModel(
        id=model_id,
        inputs={n: var(n) for n in in_names},
        outputs={n: var(n) for n in out_names},
        rules=_rule_table(model_id, variant),
        w_angle=w_angle,
        w_speed=w_speed,
        cruise_speed=cruise_speed,
        variant=variant,
    )


@dataclass(frozen=True)
class Inference:
    outputs: dict
    firing: tuple[float, ...]
    inactive: tuple[str, ...] = field(default_factory=tuple)


def neutral_value(name: str) -> float:
    return SPEED_MID if name == "speed" else 0.0


def infer(model: ControllerModel, inputs: Mapping[str, float]) -> Inference:
    crisp = {}
    for name, var in model.inputs.items():
        if name not in inputs:
            raise KeyError(f"missing controller input {name!r}")
        crisp[name] = min(max(float(inputs[name]), var.lo), var.hi)

    firing = []
    for rule in model.rules:
        degree = 1.0
        for name, s, negated in rule.antecedents:
            mu = model.inputs[name].sets[s](crisp[name])
            degree = min(degree, 1.0 - mu if negated else mu)
        firing.append(degree)

    outputs, inactive = {}, []
    for name, var in model.outputs.items():
        grid = var.grid()
        agg = np.zeros_like(grid)
        for rule, w in zip(model.rules, firing):
            if rule.consequent[0] == name and w > 0.0:
                agg = np.maximum(agg, np.minimum(w, var.sets[rule.consequent[1]](grid)))
        total = agg.sum()
        if total > 0.0:
            outputs[name] = float((grid * agg).sum() / total)
        else:
            outputs[name] = neutral_value(name)
            inactive.append(name)
            log.debug("no activation for %s; using neutral %g", name, outputs[name])
    return Inference(outputs, tuple(firing), tuple(inactive))


@dataclass(frozen=True)
class Command:
    lateral_velocity: float  # m/s, + rightward
    forward_speed: float  # m/s


def denormalize(outputs: Mapping[str, float], model: ControllerModel) -> Command:
    """Scale crisp universe outputs to velocities with the model's weights."""
    lateral = model.w_angle * outputs.get("angle", 0.0)
    forward = model.cruise_speed
    if model.has_speed:
        forward = model.cruise_speed + model.w_speed * (outputs.get("speed", SPEED_MID) - SPEED_MID)
    return Command(lateral, forward)


def neutral_command(model: ControllerModel) -> Command:
    return Command(0.0, model.cruise_speed)


def describe(model: ControllerModel, samples: int = 11) -> str:
    """Human-readable dump of a resolved model with membership tables."""
    lines = [
        f"model: {model.id} (rules = {model.variant})",
        f"weights: w_angle = {model.w_angle:g}, w_speed = {model.w_speed:g}, cruise_speed = {model.cruise_speed:g}",
    ]
    for kind, group in (("input", model.inputs), ("output", model.outputs)):
        for name, var in group.items():
            lines.append(f"{kind} {name} [{var.lo:g}, {var.hi:g}]")
            xs = np.linspace(var.lo, var.hi, samples)
            lines.append("    x       " + " ".join(f"{x:6.2f}" for x in xs))
            for sname, mf in var.sets.items():
                lines.append(f"    {sname:<10} " + " ".join(f"{mf(x):6.3f}" for x in xs) + f"   ({mf})")
    lines.append("rules:")
    for i, rule in enumerate(model.rules, 1):
        lines.append(f"  {i}. {rule}")
    return "\n".join(lines)


def with_weights(model: ControllerModel, **kw) -> ControllerModel:
    return replace(model, **kw)
