"""Built-in evaluation tasks, scenario generators, and the batch harness.

Tasks 1-7 are static tabletop manipulation; tasks 8-12 add moving objects
or targets that start outside the camera field of view.  Every scenario
is generated deterministically from ``(seed, task_id, trial)`` and ships
its own oracle directive list, so the reference backend can solve it from
ground truth.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

from . import trace as tracemod
from .loop import LoopConfig, run_episode
from .oracle import Approach, Goto, OracleSolver, Pick, Release, Scan, WaitVisible
from .perception import CameraModel
from .preprocess import build_plan
from .robot import make_spec
from .world import Motion, Shape, WorldModel, WorldObject

BLOCK = Shape("rectangle", (40.0, 40.0))
BALL = Shape("circle", (18.0,))
BOWL = Shape("circle", (55.0,))
BUCKET = Shape("circle", (60.0,))
HAND = Shape("rectangle", (80.0, 80.0))
SCREWDRIVER = Shape("rectangle", (90.0, 25.0))

_RELEASE_Z = 20.0
_STACK_STEP = 45.0
_ORDINALS = {1: "first", 2: "second", 3: "third"}
_DIRECTIONS = {
    "north": (0.0, 1.0), "south": (0.0, -1.0),
    "east": (1.0, 0.0), "west": (-1.0, 0.0),
}


@dataclass(frozen=True)
class Region:
    cx: float
    cy: float
    half: float

    def contains(self, xy) -> bool:
        return (abs(xy[0] - self.cx) <= self.half
                and abs(xy[1] - self.cy) <= self.half)


@dataclass
class Scenario:
    prompt: str
    world: WorldModel
    camera: CameraModel
    plan_reply: str
    objects_reply: str
    directives: list
    success: object  # callable(scenario, result) -> bool
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TaskDef:
    id: int
    name: str
    dynamic: bool
    build: object  # callable(rng, spec) -> Scenario


def _rng_for(seed: int, task_id: int, trial: int) -> random.Random:
    return random.Random(f"{seed}:{task_id}:{trial}")


def _scatter(rng, n, radius=170.0, min_sep=90.0, existing=()):
    pts = [tuple(p) for p in existing]
    out = []
    while len(out) < n:
        x = rng.uniform(-radius, radius)
        y = rng.uniform(-radius, radius)
        if math.hypot(x, y) > radius:
            continue
        if any(math.hypot(x - px, y - py) < min_sep for px, py in pts):
            continue
        pts.append((x, y))
        out.append((x, y))
    return out


def _fixed_camera(noise=(0.0, 0.0)) -> CameraModel:
    return CameraModel(displacement=(-250.0, -250.0, 1000.0),
                       fov_size=(500.0, 500.0), resolution=(500, 500),
                       noise_sigma=noise[0], dropout_prob=noise[1])


def _wrist_camera(noise=(0.0, 0.0)) -> CameraModel:
    return CameraModel(displacement=(-120.0, -120.0, 800.0),
                       fov_size=(240.0, 240.0), resolution=(240, 240),
                       noise_sigma=noise[0], dropout_prob=noise[1],
                       attach_to_effector=True)


def _block(oid, xy, color="green", motion=None) -> WorldObject:
    return WorldObject(id=oid, label="block", color=color, shape=BLOCK,
                       pose=(xy[0], xy[1], 0.0),
                       motion=motion or Motion.static())


def _plan_text(steps) -> str:
    items = list(steps) + ["done"]
    return ", ".join(f"{i + 1}. {s}" for i, s in enumerate(items))


def _move_block_steps(what, where):
    return [f"pick up the {what}", f"go to the {where}",
            f"put down the {what}"]


def _move_block_directives(oid, tx, ty, tz=_RELEASE_Z):
    return [Pick(oid), Goto(tx, ty, tz), Release()]


# ---------------------------------------------------------------------------
# task builders (rng, spec, noise) -> Scenario


def _corner_region() -> Region:
    return Region(115.0, 115.0, 35.0)


def _build_stack(rng, spec, noise):
    pts = _scatter(rng, 3, min_sep=110.0)
    blocks = [_block(i, p) for i, p in enumerate(pts)]
    bx, by = pts[0]
    directives, steps = [], []
    for k, blk in enumerate(blocks[1:], start=1):
        directives += _move_block_directives(blk.id, bx, by,
                                             k * _STACK_STEP + 5.0)
        steps += _move_block_steps(f"{_ORDINALS[k + 1]} block", "stack")

    def success(scn, result):
        objs = sorted(result.world.by_label("block"), key=lambda o: o.pose[2])
        base = objs[0]
        for below, above in zip(objs, objs[1:]):
            if above.pose[2] <= below.pose[2]:
                return False
        return all(math.hypot(o.pose[0] - base.pose[0],
                              o.pose[1] - base.pose[1]) <= 15.0
                   for o in objs)

    return Scenario(
        prompt="stack all the blocks",
        world=WorldModel(objects=tuple(blocks)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(steps),
        objects_reply="block",
        directives=directives,
        success=success,
    )


def _build_corner(rng, spec, noise):
    region = _corner_region()
    avoid = [(region.cx, region.cy)]
    pts = _scatter(rng, 3, min_sep=95.0, existing=avoid)
    blocks = [_block(i, p) for i, p in enumerate(pts)]
    offsets = ((-22.0, -18.0), (22.0, -18.0), (0.0, 22.0))
    directives, steps = [], []
    for blk, (ox, oy) in zip(blocks, offsets):
        directives += _move_block_directives(blk.id, region.cx + ox,
                                             region.cy + oy)
        steps += _move_block_steps("block", "corner")

    def success(scn, result):
        return all(region.contains(o.centroid())
                   for o in result.world.by_label("block"))

    return Scenario(
        prompt="move all the blocks to the top right corner",
        world=WorldModel(objects=tuple(blocks)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(steps),
        objects_reply="block",
        directives=directives,
        success=success,
        params={"region": region},
    )


def _build_bowl(rng, spec, noise):
    pts = _scatter(rng, 4, radius=150.0, min_sep=120.0)
    bowl = WorldObject(id=0, label="bowl", color="white", shape=BOWL,
                       pose=(pts[0][0], pts[0][1], 0.0), height=30.0)
    blocks = [_block(i + 1, p) for i, p in enumerate(pts[1:])]
    offsets = ((-20.0, 0.0), (20.0, 0.0), (0.0, 20.0))
    directives, steps = [], []
    for blk, (ox, oy) in zip(blocks, offsets):
        directives += _move_block_directives(blk.id, bowl.pose[0] + ox,
                                             bowl.pose[1] + oy)
        steps += _move_block_steps("block", "bowl")

    def success(scn, result):
        bowl_now = result.world.get(0)
        return all(bowl_now.footprint_contains(o.centroid())
                   for o in result.world.by_label("block"))

    return Scenario(
        prompt="put all the blocks in the bowl",
        world=WorldModel(objects=(bowl,) + tuple(blocks)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(steps),
        objects_reply="block, bowl",
        directives=directives,
        success=success,
    )


def _build_color_match(rng, spec, noise):
    pts = _scatter(rng, 4, radius=150.0, min_sep=120.0)
    colors = ("red", "blue")
    bowls = [WorldObject(id=i, label="bowl", color=c, shape=BOWL,
                         pose=(pts[i][0], pts[i][1], 0.0), height=30.0)
             for i, c in enumerate(colors)]
    blocks = [_block(i + 2, pts[i + 2], color=c)
              for i, c in enumerate(colors)]
    directives, steps = [], []
    for blk, bowl in zip(blocks, bowls):
        directives += _move_block_directives(blk.id, bowl.pose[0],
                                             bowl.pose[1])
        steps += _move_block_steps(f"{blk.color} block",
                                   f"{blk.color} bowl")

    def success(scn, result):
        for blk in result.world.by_label("block"):
            bowl = next(b for b in result.world.by_label("bowl")
                        if b.color == blk.color)
            if not bowl.footprint_contains(blk.centroid()):
                return False
        return True

    return Scenario(
        prompt="sort the blocks into the bowls with matching colors",
        world=WorldModel(objects=tuple(bowls) + tuple(blocks)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(steps),
        objects_reply="block, bowl",
        directives=directives,
        success=success,
    )


def _relational_pick(rng, spec, noise, prompt, target_index_of):
    """Shared shape of tasks 5-7: pick one designated block, bin it."""
    region = _corner_region()
    bowl_xy = _scatter(rng, 1, radius=70.0,
                       existing=[(region.cx, region.cy)])[0]
    dirs = rng.sample(sorted(_DIRECTIONS), 3)
    blocks = []
    for i, d in enumerate(dirs):
        vx, vy = _DIRECTIONS[d]
        dist = 90.0 + 18.0 * i
        blocks.append(_block(i + 1, (bowl_xy[0] + vx * dist,
                                     bowl_xy[1] + vy * dist)))
    bowl = WorldObject(id=0, label="bowl", color="white", shape=BOWL,
                       pose=(bowl_xy[0], bowl_xy[1], 0.0), height=30.0)
    target, rendered_prompt = target_index_of(blocks, dirs, prompt)
    directives = _move_block_directives(target.id, region.cx, region.cy)
    steps = _move_block_steps("block", "corner")

    def success(scn, result):
        return region.contains(result.world.get(target.id).centroid())

    return Scenario(
        prompt=rendered_prompt,
        world=WorldModel(objects=(bowl,) + tuple(blocks)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(steps),
        objects_reply="block, bowl",
        directives=directives,
        success=success,
        params={"target_id": target.id, "region": region},
    )


def _build_direction(rng, spec, noise):
    def chooser(blocks, dirs, prompt):
        d = rng.choice(dirs)
        target = blocks[dirs.index(d)]
        return target, prompt.format(direction=d)

    return _relational_pick(
        rng, spec, noise,
        "put the block {direction} of the bowl into the corner", chooser)


def _build_distance(rng, spec, noise):
    def chooser(blocks, dirs, prompt):
        rank = rng.choice(["closest to", "farthest from"])
        # blocks are laid out at strictly increasing distance from the bowl
        target = blocks[0] if rank == "closest to" else blocks[-1]
        return target, prompt.format(rank=rank)

    return _relational_pick(
        rng, spec, noise,
        "put the block {rank} the bowl into the corner", chooser)


def _build_ordinal(rng, spec, noise):
    def chooser(blocks, dirs, prompt):
        n = rng.randrange(3)
        by_x = sorted(blocks, key=lambda b: b.pose[0])
        return by_x[n], prompt.format(ordinal=_ORDINALS[n + 1])

    return _relational_pick(
        rng, spec, noise,
        "pick up the {ordinal} block from the left and put it in the corner",
        chooser)


def _build_moving_ball(rng, spec, noise):
    p0 = _scatter(rng, 1, radius=120.0)[0]
    p1 = (p0[0] + rng.uniform(40.0, 70.0), p0[1] - rng.uniform(20.0, 50.0))
    p2 = (p0[0] - rng.uniform(20.0, 50.0), p0[1] + rng.uniform(40.0, 70.0))
    ball = WorldObject(
        id=0, label="ball", color="orange", shape=BALL,
        pose=(p0[0], p0[1], 0.0),
        motion=Motion.along(((p1[0], p1[1], 0.0), (p2[0], p2[1], 0.0)),
                            speed=25.0, loop=True))

    def success(scn, result):
        return result.state.holding == 0

    return Scenario(
        prompt="follow the ball and pick it up",
        world=WorldModel(objects=(ball,)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(["find the ball", "pick up the ball"]),
        objects_reply="ball",
        directives=[Scan("ball"), Pick(0)],
        success=success,
    )


def _build_handover(rng, spec, noise):
    p0 = _scatter(rng, 1, radius=120.0, existing=[(-120.0, 60.0)])[0]
    p1 = (p0[0] + rng.uniform(40.0, 70.0), p0[1] + rng.uniform(20.0, 50.0))
    ball = WorldObject(
        id=0, label="ball", color="orange", shape=BALL,
        pose=(p0[0], p0[1], 0.0),
        motion=Motion.along(((p1[0], p1[1], 0.0),), speed=20.0, loop=True))
    hx = -120.0 + rng.uniform(-15.0, 15.0)
    hy = 60.0 + rng.uniform(-15.0, 15.0)
    hand = WorldObject(
        id=1, label="hand", color="skin", shape=HAND, pose=(hx, hy, 0.0),
        motion=Motion.along(((hx + 30.0, hy + 20.0, 0.0),),
                            speed=10.0, loop=False))

    def success(scn, result):
        ball_now, hand_now = result.world.get(0), result.world.get(1)
        close = math.hypot(ball_now.pose[0] - hand_now.pose[0],
                           ball_now.pose[1] - hand_now.pose[1]) <= 30.0
        return close and result.state.holding is None

    return Scenario(
        prompt="take the ball and give it back to me",
        world=WorldModel(objects=(ball, hand)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(["find the ball", "pick up the ball",
                               "go to the hand", "put down the ball"]),
        objects_reply="ball, hand",
        directives=[Scan("ball"), Pick(0), Approach(1, stop_radius=15.0),
                    Release()],
        success=success,
    )


def _build_bucket(rng, spec, noise):
    hx = 150.0 if spec.kind == "scara" else 110.0
    ball = WorldObject(id=0, label="ball", color="orange", shape=BALL,
                       pose=(hx + rng.uniform(-15.0, 15.0),
                             rng.uniform(-30.0, 30.0), 0.0))
    bucket = WorldObject(id=1, label="bucket", color="grey", shape=BUCKET,
                         pose=(-195.0, rng.uniform(-18.0, 2.0), 0.0),
                         height=80.0)

    def success(scn, result):
        bucket_now = result.world.get(1)
        return (bucket_now.footprint_contains(result.world.get(0).centroid())
                and result.state.holding is None)

    return Scenario(
        prompt="find the bucket and put the ball in it",
        world=WorldModel(objects=(ball, bucket)),
        camera=_wrist_camera(noise),
        plan_reply=_plan_text(["find the ball", "pick up the ball",
                               "find the bucket", "go to the bucket",
                               "put down the ball"]),
        objects_reply="ball, bucket",
        directives=[Scan("ball"), Pick(0), Scan("bucket"),
                    Goto(bucket.pose[0], bucket.pose[1], 60.0), Release()],
        success=success,
    )


def _build_tidy(rng, spec, noise):
    block_zone = Region(115.0, 115.0, 45.0)
    ball_zone = Region(-115.0, 115.0, 45.0)
    avoid = [(block_zone.cx, block_zone.cy), (ball_zone.cx, ball_zone.cy)]
    pts = _scatter(rng, 4, radius=150.0, min_sep=95.0, existing=avoid)
    mover_end = (pts[1][0] + 70.0, pts[1][1] - 40.0, 0.0)
    objs = (
        _block(0, pts[0]),
        _block(1, pts[1], motion=Motion.along((mover_end,), speed=12.0,
                                              loop=False)),
        WorldObject(id=2, label="ball", color="orange", shape=BALL,
                    pose=(pts[2][0], pts[2][1], 0.0)),
        WorldObject(id=3, label="ball", color="orange", shape=BALL,
                    pose=(pts[3][0], pts[3][1], 0.0)),
    )
    zone_of = {0: block_zone, 1: block_zone, 2: ball_zone, 3: ball_zone}
    offsets = {0: (-20.0, 0.0), 1: (20.0, 0.0), 2: (-20.0, 0.0),
               3: (20.0, 0.0)}
    directives, steps = [], []
    for oid in range(4):
        zone, (ox, oy) = zone_of[oid], offsets[oid]
        directives += _move_block_directives(oid, zone.cx + ox, zone.cy + oy)
        what = "block" if oid < 2 else "ball"
        steps += _move_block_steps(what, f"{what} zone")

    def success(scn, result):
        return all(zone_of[oid].contains(result.world.get(oid).centroid())
                   for oid in range(4))

    return Scenario(
        prompt="tidy up: blocks in the block zone, balls in the ball zone",
        world=WorldModel(objects=objs),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(steps),
        objects_reply="block, ball",
        directives=directives,
        success=success,
        params={"block_zone": block_zone, "ball_zone": ball_zone},
    )


def _build_hand_tool(rng, spec, noise):
    stop = (150.0 + rng.uniform(-10.0, 10.0), 90.0 + rng.uniform(-10.0, 10.0))
    hand = WorldObject(
        id=0, label="hand", color="skin", shape=HAND, pose=(330.0, 180.0, 0.0),
        motion=Motion.along(((stop[0], stop[1], 0.0),), speed=45.0,
                            loop=False))
    sd_xy = _scatter(rng, 1, radius=150.0, existing=[stop])[0]
    screwdriver = WorldObject(id=1, label="screwdriver", color="yellow",
                              shape=SCREWDRIVER, pose=(sd_xy[0], sd_xy[1], 0.0))

    def success(scn, result):
        hand_now, sd_now = result.world.get(0), result.world.get(1)
        close = math.hypot(sd_now.pose[0] - hand_now.pose[0],
                           sd_now.pose[1] - hand_now.pose[1]) <= 30.0
        hand_seen = any(
            any(d[1] == "hand" for d in e.get("detections", ()))
            for e in result.trace.events if e["ev"] == tracemod.EV_SNAPSHOT)
        return close and hand_seen and result.state.holding is None

    return Scenario(
        prompt="when you see my hand, hand me the screwdriver",
        world=WorldModel(objects=(hand, screwdriver)),
        camera=_fixed_camera(noise),
        plan_reply=_plan_text(["wait for the hand", "pick up the screwdriver",
                               "go to the hand", "put down the screwdriver"]),
        objects_reply="screwdriver, hand",
        directives=[WaitVisible("hand"), Pick(1),
                    Approach(0, stop_radius=15.0), Release()],
        success=success,
    )


TASKS: tuple[TaskDef, ...] = (
    TaskDef(1, "stack_blocks", False, _build_stack),
    TaskDef(2, "blocks_to_corner", False, _build_corner),
    TaskDef(3, "blocks_in_bowl", False, _build_bowl),
    TaskDef(4, "color_match", False, _build_color_match),
    TaskDef(5, "pick_by_direction", False, _build_direction),
    TaskDef(6, "pick_by_distance", False, _build_distance),
    TaskDef(7, "pick_by_ordinal", False, _build_ordinal),
    TaskDef(8, "follow_moving_ball", True, _build_moving_ball),
    TaskDef(9, "handover_ball", True, _build_handover),
    TaskDef(10, "ball_into_hidden_bucket", True, _build_bucket),
    TaskDef(11, "tidy_by_class", True, _build_tidy),
    TaskDef(12, "tool_on_hand_arrival", True, _build_hand_tool),
)


def get_task(task_id: int) -> TaskDef:
    for t in TASKS:
        if t.id == task_id:
            return t
    raise ValueError(f"no task with id {task_id}")


def make_scenario(task_id: int, robot: str = "scara", seed: int = 0,
                  trial: int = 0, noise=(0.0, 0.0)) -> Scenario:
    task = get_task(task_id)
    rng = _rng_for(seed, task_id, trial)
    return task.build(rng, make_spec(robot), noise)


# ---------------------------------------------------------------------------
# batch harness


@dataclass
class TrialResult:
    task_id: int
    trial: int
    success: bool
    outcome: str
    sim_time: float
    trace: object = None  # EpisodeTrace; dropped when persisted separately
    error: str | None = None

    @property
    def completion_time(self) -> float | None:
        """Simulated seconds to finish; defined only on success."""
        return self.sim_time if self.success else None


def run_trial(task_id: int, robot: str = "scara", seed: int = 0,
              trial: int = 0, noise=(0.0, 0.0),
              config: LoopConfig | None = None,
              backend=None) -> TrialResult:
    scenario = make_scenario(task_id, robot, seed, trial, noise)
    spec = make_spec(robot)
    if backend is None:
        backend = OracleSolver(directives=scenario.directives,
                               plan_reply=scenario.plan_reply,
                               objects_reply=scenario.objects_reply)
    plan = build_plan(scenario.prompt, backend)
    cfg = config or LoopConfig()
    cfg = replace(cfg, seed=seed * 10007 + task_id * 101 + trial)
    result = run_episode(plan, scenario.world, spec, scenario.camera,
                         backend, cfg,
                         meta={"task_id": task_id, "trial": trial,
                               "robot_kind": robot})
    ok = result.outcome == "completed" and bool(scenario.success(scenario,
                                                                 result))
    return TrialResult(task_id=task_id, trial=trial, success=ok,
                       outcome=result.outcome,
                       sim_time=result.sim_time, trace=result.trace)


@dataclass(frozen=True)
class TaskMetrics:
    task_id: int
    trials: int
    successes: int
    mean_time: float | None  # mean sim seconds over successful trials

    @property
    def success_rate(self) -> float:
        return round(100.0 * self.successes / self.trials, 1)


@dataclass(frozen=True)
class Metrics:
    per_task: tuple[TaskMetrics, ...]
    trials: int
    successes: int

    @property
    def overall(self) -> float:
        """Pooled success rate: total successes over total trials."""
        return round(100.0 * self.successes / self.trials, 1)


def aggregate(results) -> Metrics:
    by_task: dict[int, list[TrialResult]] = {}
    for r in results:
        by_task.setdefault(r.task_id, []).append(r)
    rows = []
    for tid in sorted(by_task):
        rs = by_task[tid]
        wins = [r for r in rs if r.success]
        mean_time = (round(sum(r.completion_time for r in wins) / len(wins), 3)
                     if wins else None)
        rows.append(TaskMetrics(task_id=tid, trials=len(rs),
                                successes=len(wins), mean_time=mean_time))
    return Metrics(per_task=tuple(rows),
                   trials=sum(m.trials for m in rows),
                   successes=sum(m.successes for m in rows))


def run_batch(task_ids, robot="scara", seed=0, trials=5, noise=(0.0, 0.0),
              config: LoopConfig | None = None):
    """Sequential batch; results ordered by (task, trial).

    Per-trial errors are recorded as failed trials, never aborting the
    batch.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = []
    for tid in task_ids:
        for trial in range(trials):
            try:
                results.append(run_trial(tid, robot, seed, trial, noise,
                                          config))
            except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                results.append(TrialResult(task_id=tid, trial=trial,
                                           success=False, outcome="error",
                                           sim_time=0.0, error=repr(exc)))
    return results
