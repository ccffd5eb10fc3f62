"""Command line front end.

Exit status: 0 on success, 1 on usage or validation errors, 2 on I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import replace
from pathlib import Path

from .fuzzy import MODEL_IDS, RULE_VARIANTS, build_model, describe
from .metrics import metrics
from .scenario import FLOW_ALIASES, SimConfig, load_scenario, resolve_scenario
from .sim import CalibrationError, calibrate_scale, read_csv, run
from .world import ScenarioError

log = logging.getLogger("flowbot")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _rebuild_controller(config: SimConfig, model_id=None, variant=None) -> SimConfig:
    old = config.controller
    sets = {}
    for var in (*old.inputs.values(), *old.outputs.values()):
        sets.update(var.sets)
    model = build_model(
        model_id or old.id,
        variant or old.variant,
        sets,
        w_angle=old.w_angle,
        w_speed=old.w_speed,
        cruise_speed=old.cruise_speed,
    )
    return replace(config, controller=model)


def cmd_run(args) -> int:
    scene, config = load_scenario(args.scenario)
    if args.controller or args.rules:
        config = _rebuild_controller(config, args.controller, args.rules)
    if args.flow:
        config = replace(config, flow=replace(config.flow, algorithm=FLOW_ALIASES[args.flow]))
    if args.steps is not None:
        config = replace(config, steps=args.steps)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    config = replace(config, dump_frames=args.dump_frames, dump_flow=args.dump_flow)
    SimConfig.__post_init__(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run(scene, config, out_dir=out)
    csv_path = out / "trajectory.csv"
    result.write_csv(csv_path)
    report = metrics(result, scene, config.transient)
    print(f"wrote {csv_path} ({len(result)} steps)")
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_calibrate(args) -> int:
    scene, config = load_scenario(args.scenario)
    factor = calibrate_scale(scene, config, args.speed)
    print(f"scale_factor = {factor:.9g}")
    if args.write:
        path = resolve_scenario(args.scenario)
        path.write_text(_set_sim_key(path.read_text(), "scale_factor", f"{factor:.9g}"))
        print(f"updated {path}")
    return 0


def _set_sim_key(text: str, key: str, value: str) -> str:
    lines = text.splitlines()
    section = None
    sim_end = None
    for i, line in enumerate(lines):
        stripped = line.split("#", 1)[0].strip()
        if stripped.startswith("["):
            if section == "sim":
                sim_end = i
            section = stripped[1:-1].strip().lower()
            continue
        if section == "sim" and re.match(rf"{key}\s*=", stripped):
            lines[i] = f"{key} = {value}"
            return "\n".join(lines) + "\n"
    if section == "sim" and sim_end is None:
        sim_end = len(lines)
    if sim_end is None:
        lines += ["", "[sim]", f"{key} = {value}"]
    else:
        lines.insert(sim_end, f"{key} = {value}")
    return "\n".join(lines) + "\n"


def cmd_metrics(args) -> int:
    table = read_csv(args.log)
    scene, config = load_scenario(args.scenario)
    print(json.dumps(metrics(table, scene, config.transient).to_dict(), indent=2))
    return 0


def cmd_dump_controller(args) -> int:
    _, config = load_scenario(args.scenario)
    print(describe(config.controller))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flowbot", description="Optical-flow fuzzy navigation simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a scenario and write trajectory.csv")
    p.add_argument("scenario")
    p.add_argument("--controller", choices=MODEL_IDS)
    p.add_argument("--rules", choices=RULE_VARIANTS)
    p.add_argument("--flow", choices=("hs", "lk"))
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="out")
    p.add_argument("--dump-frames", action="store_true")
    p.add_argument("--dump-flow", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("calibrate", help="calibrate the flow scale factor on a scenario")
    p.add_argument("scenario")
    p.add_argument("--speed", type=float, help="glide speed (default: the controller's cruise speed)")
    p.add_argument("--write", action="store_true", help="store the factor in the scenario's [sim] section")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("metrics", help="recompute metrics from a trajectory CSV")
    p.add_argument("log")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("dump-controller", help="print the resolved fuzzy controller")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_dump_controller)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, CalibrationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
