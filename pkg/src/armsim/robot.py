"""Simulated SCARA and DELTA arms.

Wraps the kinematics kernels with workspace checks, time-stepped motion
toward commanded frames, and gripper actuation.  States are immutable
values; ``step`` is a pure function of its inputs.

Geometry defaults (the source material fixes only the workspace radii and
z ranges; the rest is configuration):
  * SCARA: two 200 mm planar links (max reach 400 mm), z slide 0..180 mm.
  * DELTA: base radius 200, effector radius 50, upper arm 200, lower arm
    400, base 430 mm above the table, working band z 0..200 mm.  The
    advertised reachable radius is a symmetric envelope
    ``r(z) = 285 - 0.625 * |z - 100|`` which lies strictly inside the
    kinematic workspace, so every advertised point has an IK solution and
    the radius profile is non-increasing away from mid-height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import kinematics as kin
from .frames import CommandFrame

SCARA = "scara"
DELTA = "delta"

GRIP_OPEN = "open"
GRIP_CLOSING = "closing"
GRIP_CLOSED = "closed"
GRIP_OPENING = "opening"

ARRIVAL_TOLERANCE_MM = 1.0
GRASP_TOLERANCE_MM = 10.0
JAW_LIMIT_MM = 100.0


class Unreachable(ValueError):
    """Target pose outside the robot workspace."""


@dataclass(frozen=True)
class RobotSpec:
    kind: str
    workspace_radius: float
    z_min: float
    z_max: float
    link_lengths: tuple[float, ...]
    joint_velocity_limits: tuple[float, ...]  # deg/s or mm/s per joint
    gripper_cycle_ticks: int = 3
    payload_kg: float = 3.0
    # DELTA-only extras
    delta_base_height: float = 430.0
    delta_mid_radius: float = 285.0
    delta_radius_slope: float = 0.625
    delta_theta_min: float = -60.0
    delta_theta_max: float = 110.0

    def __post_init__(self):
        if self.workspace_radius <= 0:
            raise ValueError("workspace_radius must be positive")
        if self.z_max <= self.z_min:
            raise ValueError("z_max must exceed z_min")
        if self.kind == SCARA:
            l1, l2 = self.link_lengths[0], self.link_lengths[1]
            if abs(l1 + l2 - self.workspace_radius) > 1e-9:
                raise ValueError("SCARA link lengths must sum to workspace_radius")


def scara_spec(**overrides) -> RobotSpec:
    kw = dict(
        kind=SCARA,
        workspace_radius=400.0,
        z_min=0.0,
        z_max=180.0,
        link_lengths=(200.0, 200.0),
        joint_velocity_limits=(180.0, 180.0, 200.0, 180.0),
        payload_kg=3.0,
    )
    kw.update(overrides)
    return RobotSpec(**kw)


def delta_spec(**overrides) -> RobotSpec:
    kw = dict(
        kind=DELTA,
        workspace_radius=285.0,
        z_min=0.0,
        z_max=200.0,
        link_lengths=(200.0, 50.0, 200.0, 400.0),
        joint_velocity_limits=(120.0, 120.0, 120.0, 180.0),
        payload_kg=5.0,
    )
    kw.update(overrides)
    return RobotSpec(**kw)


def spec_from_dict(d: dict) -> RobotSpec:
    """Build a spec from a flat config mapping (documented in the README)."""
    kind = d.get("kind", SCARA).lower()
    base = scara_spec if kind == SCARA else delta_spec
    keys = {
        "workspace_radius", "z_min", "z_max", "gripper_cycle_ticks",
        "payload_kg", "delta_base_height", "delta_mid_radius",
        "delta_radius_slope", "delta_theta_min", "delta_theta_max",
    }
    kw = {k: d[k] for k in keys if k in d}
    if "link_lengths" in d:
        kw["link_lengths"] = tuple(float(v) for v in d["link_lengths"])
    if "joint_velocity_limits" in d:
        kw["joint_velocity_limits"] = tuple(float(v) for v in d["joint_velocity_limits"])
    return base(**kw)


def spec_to_dict(spec: RobotSpec) -> dict:
    return {
        "kind": spec.kind,
        "workspace_radius": spec.workspace_radius,
        "z_min": spec.z_min,
        "z_max": spec.z_max,
        "link_lengths": list(spec.link_lengths),
        "joint_velocity_limits": list(spec.joint_velocity_limits),
        "gripper_cycle_ticks": spec.gripper_cycle_ticks,
        "payload_kg": spec.payload_kg,
        "delta_base_height": spec.delta_base_height,
        "delta_mid_radius": spec.delta_mid_radius,
        "delta_radius_slope": spec.delta_radius_slope,
        "delta_theta_min": spec.delta_theta_min,
        "delta_theta_max": spec.delta_theta_max,
    }


def make_spec(kind: str) -> RobotSpec:
    if kind == SCARA:
        return scara_spec()
    if kind == DELTA:
        return delta_spec()
    raise ValueError(f"unknown robot kind {kind!r}")


@dataclass(frozen=True)
class JointState:
    joint_values: tuple[float, float, float, float]


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    z: float
    rotation: float = 0.0

    def xyz(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def distance_xyz(self, other: "Pose") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2
            + (self.y - other.y) ** 2
            + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class RobotState:
    joints: JointState
    gripper: str = GRIP_OPEN
    gripper_progress: int = 0
    holding: int | None = None  # world object id

    def pose(self, spec: RobotSpec) -> Pose:
        return forward_kinematics(spec, self.joints)

    @property
    def busy(self) -> bool:
        return self.gripper in (GRIP_CLOSING, GRIP_OPENING)


def home_state(spec: RobotSpec) -> RobotState:
    """Neutral start: end effector inside the workspace at travel height."""
    if spec.kind == SCARA:
        target = Pose(200.0, 0.0, 60.0, 0.0)
    else:
        target = Pose(0.0, 0.0, 100.0, 0.0)
    return RobotState(joints=inverse_kinematics(spec, target))


def forward_kinematics(spec: RobotSpec, joints: JointState) -> Pose:
    j = joints.joint_values
    if spec.kind == SCARA:
        x, y, z, r = kin.scara_fk(spec.link_lengths[0], spec.link_lengths[1],
                                  j[0], j[1], j[2], j[3])
    else:
        rb, re, rf, rl = spec.link_lengths
        out = kin.delta_fk(rb, re, rf, rl, spec.delta_base_height,
                           j[0], j[1], j[2], j[3])
        if out is None:
            raise ValueError("degenerate joint configuration")
        x, y, z, r = out
    return Pose(x, y, z, r)


def _delta_radius_cap(spec: RobotSpec, z: float) -> float:
    mid = 0.5 * (spec.z_min + spec.z_max)
    return spec.delta_mid_radius - spec.delta_radius_slope * abs(z - mid)


def inverse_kinematics(spec: RobotSpec, target: Pose) -> JointState:
    if target.z < spec.z_min or target.z > spec.z_max:
        raise Unreachable(f"z={target.z} outside [{spec.z_min}, {spec.z_max}]")
    if spec.kind == SCARA:
        r2 = target.x * target.x + target.y * target.y
        if r2 > spec.workspace_radius ** 2:
            raise Unreachable(f"radius {math.sqrt(r2):.1f} beyond {spec.workspace_radius}")
        sol = kin.scara_ik(spec.link_lengths[0], spec.link_lengths[1],
                           target.x, target.y, target.z, target.rotation)
        if sol is None:
            raise Unreachable("no SCARA solution")
        return JointState(tuple(sol))
    r = math.hypot(target.x, target.y)
    if r > _delta_radius_cap(spec, target.z):
        raise Unreachable(f"radius {r:.1f} beyond envelope at z={target.z}")
    rb, re, rf, rl = spec.link_lengths
    sol = kin.delta_ik(rb, re, rf, rl, spec.delta_base_height,
                       target.x, target.y, target.z, target.rotation)
    if sol is None:
        raise Unreachable("no DELTA solution")
    for t in sol[:3]:
        if t < spec.delta_theta_min or t > spec.delta_theta_max:
            raise Unreachable(f"arm angle {t:.1f} outside joint range")
    return JointState(tuple(sol))


def is_reachable(spec: RobotSpec, point: tuple[float, float, float]) -> bool:
    try:
        inverse_kinematics(spec, Pose(point[0], point[1], point[2]))
    except Unreachable:
        return False
    return True


def _frame_pose(frame: CommandFrame) -> Pose:
    return Pose(frame.x, frame.y, frame.z, frame.rotation)


def _advance_gripper(state: RobotState, spec: RobotSpec, want_closed: bool,
                     world=None) -> RobotState:
    """One tick of gripper actuation; resolves grasp/release on completion."""
    g, progress = state.gripper, state.gripper_progress
    if want_closed and g in (GRIP_OPEN, GRIP_OPENING):
        g, progress = GRIP_CLOSING, 0
    elif not want_closed and g in (GRIP_CLOSED, GRIP_CLOSING):
        g, progress = GRIP_OPENING, 0
        state = replace(state, holding=None)  # release at the current pose

    if g in (GRIP_CLOSING, GRIP_OPENING):
        progress += 1
        if progress >= spec.gripper_cycle_ticks:
            done = GRIP_CLOSED if g == GRIP_CLOSING else GRIP_OPEN
            state = replace(state, gripper=done, gripper_progress=0)
            if done == GRIP_CLOSED and world is not None:
                pose = state.pose(spec)
                obj = world.grasp_candidate((pose.x, pose.y),
                                            GRASP_TOLERANCE_MM, JAW_LIMIT_MM)
                if obj is not None:
                    state = replace(state, holding=obj.id)
            return state
    return replace(state, gripper=g, gripper_progress=progress)


def gripper_command(state: RobotState, spec: RobotSpec, close: bool,
                    world=None) -> RobotState:
    """Initiate/advance an open or close transition by one tick."""
    return _advance_gripper(state, spec, close, world)


def step(state: RobotState, spec: RobotSpec, target: CommandFrame,
         dt: float, world=None) -> tuple[RobotState, bool]:
    """Advance one tick toward a filtered command frame.

    Each joint moves at most its velocity limit times dt; the gripper
    advances one tick toward the frame's grip_a intent.  Returns the new
    state and whether the robot has settled (pose within tolerance and
    gripper transition complete).
    """
    goal = inverse_kinematics(spec, _frame_pose(target))
    cur = state.joints.joint_values
    nxt = []
    for value, goal_value, limit in zip(cur, goal.joint_values,
                                        spec.joint_velocity_limits):
        max_move = limit * dt
        delta = goal_value - value
        if delta > max_move:
            delta = max_move
        elif delta < -max_move:
            delta = -max_move
        nxt.append(value + delta)
    moved = replace(state, joints=JointState(tuple(nxt)))
    moved = _advance_gripper(moved, spec, bool(target.grip_a), world)

    pose = moved.pose(spec)
    want = GRIP_CLOSED if target.grip_a else GRIP_OPEN
    arrived = (pose.distance_xyz(_frame_pose(target)) <= ARRIVAL_TOLERANCE_MM
               and moved.gripper == want)
    return moved, arrived
