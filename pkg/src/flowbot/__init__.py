"""Optical-flow driven fuzzy navigation in a ray-cast 2.5-D world."""

from .aggregate import RegionFlow, aggregate, scale, segment, trimmed_mean
from .flow import FlowField, FlowParams, Frame, enhance, gradients, horn_schunck, lucas_kanade, to_grayscale
from .fuzzy import Command, ControllerModel, MembershipFunction, build_model, denormalize, infer, membership
from .metrics import MetricsReport, metrics
from .render import CameraModel, ColorFrame, render_frame
from .robot import Constraints, RobotState, apply_command, check_collision
from .scenario import SimConfig, load_scenario, parse_scenario, serialize_scene
from .sim import CalibrationError, TrajectoryLog, calibrate_scale, run
from .world import DynamicScript, ScenarioError, Texture, WallSegment, WorldScene, cast_ray, sample_texture, step_world

__version__ = "0.1.0"
