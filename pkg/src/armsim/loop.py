"""Closed-loop executive: perceive, query, filter, dispatch, step.

Each atomic action runs its own query/feedback loop.  Every
``feedback_every`` ticks a fresh scene snapshot is rendered, the context
is assembled, the backend is queried, and the reply passes the
pre-execution filter.  Accepted frames become the robot's motion target;
between queries the robot keeps moving toward the last accepted frame
while scripted objects advance.  A pure halt ends the action.
"""

from __future__ import annotations

import hashlib
import random
from collections import deque
from dataclasses import dataclass, field, replace

from . import trace as tracemod
from .controller import (
    BackendFailure,
    FilterConfig,
    assemble_context,
    filter_raw_text,
    make_context,
    recycle,
    robot_state_text,
)
from .perception import CameraModel, perceive, scene_to_text
from .preprocess import TaskPlan
from .robot import (
    RobotSpec,
    RobotState,
    home_state,
    spec_to_dict,
    step,
)
from .trace import EpisodeTrace
from .world import WorldModel, advance_world, Motion

OUTCOME_HALTED = "halted"
OUTCOME_COMPLETED = "completed"
OUTCOME_TIMEOUT = "timeout"
OUTCOME_REJECTION_LIMIT = "rejection_limit"
OUTCOME_BACKEND_FAILURE = "backend_failure"

_HISTORY_FRAMES = 3  # detection frames retained for the tracker


@dataclass
class LoopConfig:
    tick_dt: float = 0.1
    feedback_every: int = 2
    max_ticks_per_action: int = 3000
    max_consecutive_rejections: int = 10
    seed: int = 0
    filter: FilterConfig = field(default_factory=FilterConfig)
    negatives_persist: bool = False  # default: reset negatives per action
    drop_basic: bool = False  # context ablations
    drop_pick: bool = False
    drop_interaction: bool = False
    use_polygons: bool = True  # segmentation ablation switch
    use_tracking: bool = True  # point-tracking ablation switch


@dataclass
class SimHandle:
    """Mutable ground-truth view shared with privileged backends.

    The loop refreshes it before every query so an oracle backend can read
    the true world instead of the rendered scene.
    """

    world: WorldModel
    state: RobotState
    spec: RobotSpec
    camera: CameraModel
    tick: int = 0
    action_index: int = 0  # 0-based into plan.actions


@dataclass
class ActionResult:
    outcome: str
    ticks: int
    queries: int
    rejections: int


@dataclass
class EpisodeResult:
    outcome: str
    world: WorldModel
    state: RobotState
    trace: EpisodeTrace
    actions: list[ActionResult]

    @property
    def sim_time(self) -> float:
        return self.trace.last_of(tracemod.EV_END)["sim_time"]


def _context_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _snapshot_event(snapshot, fov):
    dets = [[d.object_id, d.label,
             round(d.centroid_mm[0], 3), round(d.centroid_mm[1], 3),
             round(d.half_extent_mm[0], 3), round(d.half_extent_mm[1], 3)]
            for d in snapshot.detections]
    tracklets = [[t.track_id, [[round(x, 3), round(y, 3)]
                               for x, y in t.points_mm]]
                 for t in snapshot.tracklets]
    return {"fov": [round(v, 3) for v in fov],
            "detections": dets, "tracklets": tracklets}


def _attach_held(world: WorldModel, state: RobotState,
                 spec: RobotSpec) -> WorldModel:
    """Held object rides the end effector; its script is cancelled."""
    if state.holding is None:
        if world.held_id is not None:
            return replace(world, held_id=None)
        return world
    pose = state.pose(spec)
    obj = world.get(state.holding)
    if obj.motion.kind != "static":
        obj = replace(obj, motion=Motion.static(), start_pose=None)
    obj = replace(obj, pose=(pose.x, pose.y, pose.z))
    return replace(world.with_object(obj), held_id=state.holding)


class EpisodeRunner:
    """Runs a plan against a world; owns the trace and all mutable state."""

    def __init__(self, plan: TaskPlan, world: WorldModel, spec: RobotSpec,
                 camera: CameraModel, backend, config: LoopConfig | None = None,
                 meta: dict | None = None):
        self.plan = plan
        self.spec = spec
        self.camera = camera
        self.backend = backend
        self.config = config or LoopConfig()
        self.rng = random.Random(self.config.seed)
        self.state = home_state(spec)
        self.world = _attach_held(world, self.state, spec)
        self.handle = SimHandle(world=self.world, state=self.state,
                                spec=spec, camera=camera)
        self.tick = 0
        self.current_target = None
        self.previous_frame = None
        self.history: deque = deque(maxlen=_HISTORY_FRAMES)
        self.labels = sorted(plan.objects) if plan.objects else None
        self.base_ctx = make_context(
            spec,
            drop_basic=self.config.drop_basic,
            drop_pick=self.config.drop_pick,
            drop_interaction=self.config.drop_interaction,
        )
        self.ctx = self.base_ctx
        header = {
            "robot": spec_to_dict(spec),
            "max_delta_mm": self.config.filter.max_delta_mm,
            "max_grip_toggles": self.config.filter.max_grip_toggles,
            "tick_dt": self.config.tick_dt,
            "feedback_every": self.config.feedback_every,
            "seed": self.config.seed,
            "noise_sigma": camera.noise_sigma,
            "actions": [a.verb_phrase for a in plan.actions],
            "prompt": plan.user_prompt,
        }
        if meta:
            header.update(meta)
        self.trace = EpisodeTrace(header=header)

    # -- per-tick pieces ----------------------------------------------------

    def _ee_xy(self):
        pose = self.state.pose(self.spec)
        return (pose.x, pose.y)

    def _perceive(self):
        snap = perceive(self.world, self.camera, self.rng, self.tick,
                        history=list(self.history), labels=self.labels,
                        ee_xy=self._ee_xy(),
                        use_polygons=self.config.use_polygons,
                        use_tracking=self.config.use_tracking)
        self.history.append(snap.detections)
        fov = self.camera.fov_rect(self._ee_xy())
        self.trace.add(tracemod.EV_SNAPSHOT, self.tick,
                       **_snapshot_event(snap, fov))
        return snap

    def _query(self, action) -> tuple:
        snap = self._perceive()
        self.ctx = replace(
            self.ctx,
            atomic_action=action.verb_phrase,
            scene_text=scene_to_text(snap),
            robot_state_text=robot_state_text(self.state, self.spec),
        )
        text = assemble_context(self.ctx)
        self.trace.add(tracemod.EV_CONTEXT, self.tick,
                       context_hash=_context_hash(text),
                       negatives=len(self.ctx.negatives))
        raw = self.backend.query(text)
        self.trace.add(tracemod.EV_OUTPUT, self.tick, raw=raw)
        verdict, output = filter_raw_text(
            raw, self.spec, self.previous_frame, self.config.filter)
        self.trace.add(tracemod.EV_VERDICT, self.tick,
                       accepted=verdict.accepted, reason=verdict.reason)
        return verdict, output

    def _step_sim(self):
        self.world = advance_world(self.world, self.config.tick_dt)
        if self.current_target is not None:
            self.state, _ = step(self.state, self.spec, self.current_target,
                                 self.config.tick_dt, self.world)
        self.world = _attach_held(self.world, self.state, self.spec)
        self.tick += 1

    def _trace_robot_state(self):
        pose = self.state.pose(self.spec)
        self.trace.add(
            tracemod.EV_ROBOT, self.tick,
            joints=[round(v, 9) for v in self.state.joints.joint_values],
            pose=[pose.x, pose.y, pose.z, pose.rotation],
            gripper=self.state.gripper,
            holding=self.state.holding,
        )
        self.trace.add(tracemod.EV_WORLD_HASH, self.tick,
                       hash=self.world.state_hash())

    def _refresh_handle(self, action_index):
        self.handle.world = self.world
        self.handle.state = self.state
        self.handle.tick = self.tick
        self.handle.action_index = action_index

    # -- drivers ------------------------------------------------------------

    def run_action(self, action_index: int) -> ActionResult:
        action = self.plan.actions[action_index]
        if not self.config.negatives_persist:
            self.ctx = replace(self.ctx, negatives=())
        rejections = 0
        queries = 0
        start_tick = self.tick
        while self.tick - start_tick < self.config.max_ticks_per_action:
            if self.tick % self.config.feedback_every == 0:
                self._refresh_handle(action_index)
                verdict, output = self._query(action)
                queries += 1
                if verdict.accepted:
                    rejections = 0
                    if verdict.frame is not None:
                        self.current_target = verdict.frame
                        self.previous_frame = verdict.frame
                        self.trace.add(
                            tracemod.EV_DISPATCH, self.tick,
                            frame=tracemod.frame_to_list(verdict.frame))
                    if output.halt:
                        self.trace.add(tracemod.EV_ACTION, self.tick,
                                       action=action.verb_phrase,
                                       outcome=OUTCOME_HALTED)
                        return ActionResult(OUTCOME_HALTED,
                                            self.tick - start_tick,
                                            queries, rejections)
                else:
                    rejections += 1
                    self.ctx = recycle(verdict, self.ctx)
                    if rejections >= self.config.max_consecutive_rejections:
                        self.trace.add(tracemod.EV_ACTION, self.tick,
                                       action=action.verb_phrase,
                                       outcome=OUTCOME_REJECTION_LIMIT)
                        return ActionResult(OUTCOME_REJECTION_LIMIT,
                                            self.tick - start_tick,
                                            queries, rejections)
            self._step_sim()
            self._trace_robot_state()
        self.trace.add(tracemod.EV_ACTION, self.tick,
                       action=action.verb_phrase, outcome=OUTCOME_TIMEOUT)
        return ActionResult(OUTCOME_TIMEOUT, self.tick - start_tick,
                            queries, rejections)

    def run(self) -> EpisodeResult:
        results = []
        outcome = OUTCOME_COMPLETED
        self._trace_robot_state()
        try:
            for i in range(len(self.plan.actions)):
                res = self.run_action(i)
                results.append(res)
                if res.outcome != OUTCOME_HALTED:
                    outcome = res.outcome
                    break
        except BackendFailure as exc:
            self.trace.add(tracemod.EV_END, self.tick,
                           outcome=OUTCOME_BACKEND_FAILURE,
                           sim_time=round(self.tick * self.config.tick_dt, 9),
                           detail=str(exc))
            return EpisodeResult(OUTCOME_BACKEND_FAILURE, self.world,
                                 self.state, self.trace, results)
        self.trace.add(tracemod.EV_END, self.tick, outcome=outcome,
                       sim_time=round(self.tick * self.config.tick_dt, 9))
        return EpisodeResult(outcome, self.world, self.state,
                             self.trace, results)


def run_episode(plan: TaskPlan, world: WorldModel, spec: RobotSpec,
                camera: CameraModel, backend,
                config: LoopConfig | None = None,
                meta: dict | None = None) -> EpisodeResult:
    runner = EpisodeRunner(plan, world, spec, camera, backend, config, meta)
    if hasattr(backend, "bind"):
        backend.bind(runner.handle)
    return runner.run()
