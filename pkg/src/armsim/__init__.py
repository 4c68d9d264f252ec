"""Deterministic desk-scale simulator for closed-loop language-driven
robot arm control: frame grammar, SCARA/DELTA kinematics, scene and
perception simulation, pre-execution filtering, and a 12-task benchmark
harness."""

__version__ = "0.1.0"

from .frames import (
    CommandFrame,
    ControllerOutput,
    EmptyOutput,
    MalformedFrame,
    parse_controller_text,
    serialize_frame,
)
from .kinematics import BACKEND as KINEMATICS_BACKEND
from .loop import EpisodeRunner, LoopConfig, run_episode
from .robot import (
    RobotSpec,
    RobotState,
    Unreachable,
    delta_spec,
    forward_kinematics,
    home_state,
    inverse_kinematics,
    is_reachable,
    make_spec,
    scara_spec,
)
from .tasks import TASKS, aggregate, make_scenario, run_batch, run_trial
from .world import Motion, Shape, WorldModel, WorldObject, advance_world

__all__ = [
    "CommandFrame",
    "ControllerOutput",
    "EmptyOutput",
    "EpisodeRunner",
    "KINEMATICS_BACKEND",
    "LoopConfig",
    "MalformedFrame",
    "Motion",
    "RobotSpec",
    "RobotState",
    "Shape",
    "TASKS",
    "Unreachable",
    "WorldModel",
    "WorldObject",
    "advance_world",
    "aggregate",
    "delta_spec",
    "forward_kinematics",
    "home_state",
    "inverse_kinematics",
    "is_reachable",
    "make_scenario",
    "make_spec",
    "parse_controller_text",
    "run_batch",
    "run_episode",
    "run_trial",
    "scara_spec",
    "serialize_frame",
    "__version__",
]
