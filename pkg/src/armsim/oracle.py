"""Scripted reference backend with ground-truth access.

The oracle answers the two preprocessing queries from canned text and
drives control queries from a per-task directive list, reading true
object poses through the :class:`~armsim.loop.SimHandle` the loop binds.
It emits frames that always satisfy the pre-execution filter: per-axis
deltas stay under the limit, targets are projected into the reachable
envelope, and at most one grip toggle appears per frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .frames import EXECUTION_MARKER, serialize_frame, CommandFrame
from .robot import GRIP_CLOSED, GRIP_CLOSING, GRIP_OPEN, RobotSpec, is_reachable

# substrings identifying the two preprocessing prompt templates
_DECOMPOSE_CUE = "Sequence the actions"
_EXTRACT_CUE = "List the objects"

STEP_MM = 90.0  # per-query travel, under the filter's delta limit
NEAR_MM = 5.0  # "arrived" slack for grasp/release decisions
GRASP_Z_OFFSET = 10.0
TRAVEL_Z_OFFSET = 60.0


@dataclass(frozen=True)
class Scan:
    """Raster-move the camera until an object with the label is visible."""
    label: str


@dataclass(frozen=True)
class WaitVisible:
    """Hold position until an object with the label enters the camera fov."""
    label: str


@dataclass(frozen=True)
class Pick:
    """Close the gripper on a specific object, chasing it if it moves."""
    object_id: int


@dataclass(frozen=True)
class Goto:
    """Move the end effector to a fixed point."""
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class Approach:
    """Track a (possibly moving) object until within stop_radius of it."""
    object_id: int
    stop_radius: float = 15.0
    z: float = 40.0


@dataclass(frozen=True)
class Release:
    """Open the gripper at the current pose."""


@dataclass
class OracleSolver:
    """Deterministic solver; one directive per executable atomic action."""

    directives: list
    plan_reply: str
    objects_reply: str
    handle: object = None  # SimHandle, bound by the loop
    last_frame: CommandFrame | None = None
    calls: int = 0
    _scan_index: dict = field(default_factory=dict)

    def bind(self, handle) -> None:
        self.handle = handle
        self.last_frame = None
        self._scan_index = {}

    # -- frame construction ---------------------------------------------

    def _anchor(self):
        if self.last_frame is not None:
            return (self.last_frame.x, self.last_frame.y, self.last_frame.z)
        pose = self.handle.state.pose(self.handle.spec)
        return (pose.x, pose.y, pose.z)

    def _clamp_reach(self, x, y, z, spec: RobotSpec):
        z = min(max(z, spec.z_min), spec.z_max)
        if is_reachable(spec, (x, y, z)):
            return x, y, z
        r = math.hypot(x, y)
        if r <= 1e-9:
            return 0.0, 0.0, z
        # walk the radius inward until the envelope admits the point
        for shrink in range(1, 200):
            s = (r - 2.0 * shrink) / r
            if s <= 0:
                break
            if is_reachable(spec, (x * s, y * s, z)):
                return x * s, y * s, z
        return 0.0, 0.0, z

    def _emit(self, x, y, z, grip) -> str:
        spec = self.handle.spec
        x, y, z = self._clamp_reach(x, y, z, spec)
        ax, ay, az = self._anchor()
        x = ax + max(-STEP_MM, min(STEP_MM, x - ax))
        y = ay + max(-STEP_MM, min(STEP_MM, y - ay))
        z = az + max(-STEP_MM, min(STEP_MM, z - az))
        x, y, z = self._clamp_reach(x, y, z, spec)
        frame = CommandFrame(frame_type=1, x=round(x, 3), y=round(y, 3),
                             z=round(z, 3), rotation=0.0, grip_a=int(grip))
        self.last_frame = frame
        return f"{EXECUTION_MARKER} {serialize_frame(frame)}"

    @staticmethod
    def _halt() -> str:
        return f"{EXECUTION_MARKER} [1]"

    # -- backend protocol --------------------------------------------------

    def query(self, context: str) -> str:
        self.calls += 1
        if _DECOMPOSE_CUE in context:
            return self.plan_reply
        if _EXTRACT_CUE in context:
            return self.objects_reply
        return self._solve()

    # -- control ------------------------------------------------------------

    def _grip_now(self):
        return 1 if self.last_frame is not None and self.last_frame.grip_a else 0

    def _visible(self, label) -> bool:
        h = self.handle
        pose = h.state.pose(h.spec)
        x0, y0, x1, y1 = h.camera.fov_rect((pose.x, pose.y))
        for obj in h.world.by_label(label):
            hx, hy = obj.shape.bbox_half_extent()
            cx, cy = obj.centroid()
            if cx + hx >= x0 and cx - hx <= x1 and cy + hy >= y0 and cy - hy <= y1:
                return True
        return False

    def _scan_waypoints(self):
        spec = self.handle.spec
        lim = min(150.0, spec.workspace_radius * 0.55)
        xs = (-lim, 0.0, lim)
        pts = []
        for i, y in enumerate(xs):
            row = xs if i % 2 == 0 else tuple(reversed(xs))
            pts.extend((x, y) for x in row)
        return pts

    def _solve(self) -> str:
        h = self.handle
        d = self.directives[h.action_index]
        spec = h.spec
        pose = h.state.pose(spec)
        grasp_z = spec.z_min + GRASP_Z_OFFSET
        travel_z = spec.z_min + TRAVEL_Z_OFFSET

        if isinstance(d, Scan):
            if self._visible(d.label):
                return self._halt()
            pts = self._scan_waypoints()
            i = self._scan_index.get(h.action_index, 0)
            tx, ty = pts[i % len(pts)]
            if math.hypot(pose.x - tx, pose.y - ty) <= 20.0:
                self._scan_index[h.action_index] = i + 1
                tx, ty = pts[(i + 1) % len(pts)]
            return self._emit(tx, ty, travel_z, self._grip_now())

        if isinstance(d, WaitVisible):
            if self._visible(d.label):
                return self._halt()
            return self._emit(pose.x, pose.y, pose.z, self._grip_now())

        if isinstance(d, Pick):
            if h.state.holding == d.object_id:
                return self._halt()
            if h.state.gripper == GRIP_CLOSED and h.state.holding is None:
                # closed on air: reopen before chasing again
                return self._emit(pose.x, pose.y, pose.z, 0)
            obj = h.world.get(d.object_id)
            ox, oy = obj.centroid()
            near = (math.hypot(pose.x - ox, pose.y - oy) <= NEAR_MM
                    and abs(pose.z - grasp_z) <= NEAR_MM)
            grip = 1 if (near or h.state.gripper == GRIP_CLOSING) else 0
            return self._emit(ox, oy, grasp_z, grip)

        if isinstance(d, Goto):
            if (math.hypot(pose.x - d.x, pose.y - d.y) <= NEAR_MM
                    and abs(pose.z - d.z) <= NEAR_MM):
                return self._halt()
            return self._emit(d.x, d.y, d.z, self._grip_now())

        if isinstance(d, Approach):
            obj = h.world.get(d.object_id)
            ox, oy = obj.centroid()
            if (math.hypot(pose.x - ox, pose.y - oy) <= d.stop_radius
                    and abs(pose.z - d.z) <= NEAR_MM):
                return self._halt()
            return self._emit(ox, oy, d.z, self._grip_now())

        if isinstance(d, Release):
            if h.state.gripper == GRIP_OPEN and h.state.holding is None:
                return self._halt()
            return self._emit(pose.x, pose.y, pose.z, 0)

        raise TypeError(f"unknown directive {d!r}")
