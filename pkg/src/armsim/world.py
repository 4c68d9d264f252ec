"""Tabletop world: objects, footprints, and scripted motion.

Motion scripts are deterministic functions of elapsed time; the rng hook
exists for future stochastic scripts but none of the built-ins use it.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

LABELS = ("block", "bowl", "ball", "hand", "bucket", "screwdriver")


@dataclass(frozen=True)
class Shape:
    kind: str  # "circle" | "rectangle" | "polygon"
    dims: tuple[float, ...]  # circle: (radius,); rectangle: (w, h); polygon: flat x,y pairs

    def __post_init__(self):
        if self.kind == "circle":
            if self.dims[0] <= 0:
                raise ValueError("circle radius must be positive")
        elif self.kind == "rectangle":
            if self.dims[0] <= 0 or self.dims[1] <= 0:
                raise ValueError("rectangle dims must be positive")
        elif self.kind == "polygon":
            if len(self.dims) < 6 or len(self.dims) % 2:
                raise ValueError("polygon needs at least 3 x,y pairs")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    def bbox_half_extent(self) -> tuple[float, float]:
        if self.kind == "circle":
            return (self.dims[0], self.dims[0])
        if self.kind == "rectangle":
            return (self.dims[0] / 2.0, self.dims[1] / 2.0)
        xs = self.dims[0::2]
        ys = self.dims[1::2]
        return (max(map(abs, xs)), max(map(abs, ys)))

    def local_vertices(self) -> tuple[tuple[float, float], ...]:
        """Outline vertices centered on the object origin."""
        if self.kind == "circle":
            r = self.dims[0]
            n = 12
            return tuple(
                (r * math.cos(2 * math.pi * i / n), r * math.sin(2 * math.pi * i / n))
                for i in range(n)
            )
        if self.kind == "rectangle":
            hw, hh = self.dims[0] / 2.0, self.dims[1] / 2.0
            return ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh))
        return tuple(zip(self.dims[0::2], self.dims[1::2]))

    def contains(self, local_xy: tuple[float, float], tol: float = 0.0) -> bool:
        x, y = local_xy
        if self.kind == "circle":
            return math.hypot(x, y) <= self.dims[0] + tol
        if self.kind == "rectangle":
            hw, hh = self.dims[0] / 2.0, self.dims[1] / 2.0
            return abs(x) <= hw + tol and abs(y) <= hh + tol
        return _point_in_polygon((x, y), self.local_vertices(), tol)


def _point_in_polygon(p, verts, tol):
    x, y = p
    inside = False
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            t = (y - y1) / (y2 - y1)
            if x < x1 + t * (x2 - x1):
                inside = not inside
    if inside:
        return True
    if tol > 0:
        return _dist_to_polygon((x, y), verts) <= tol
    return False


def _dist_to_polygon(p, verts):
    best = math.inf
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        L2 = dx * dx + dy * dy
        t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((p[0] - x1) * dx + (p[1] - y1) * dy) / L2))
        best = min(best, math.hypot(p[0] - (x1 + t * dx), p[1] - (y1 + t * dy)))
    return best


@dataclass(frozen=True)
class Motion:
    kind: str = "static"  # "static" | "linear" | "waypoints" | "attached"
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)  # linear, mm/s
    waypoints: tuple[tuple[float, float, float], ...] = ()
    speed: float = 0.0  # waypoints, mm/s
    loop: bool = True  # waypoints: cycle forever vs stop at the end
    parent: int | None = None  # attached
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)  # attached

    @staticmethod
    def static() -> "Motion":
        return Motion()

    @staticmethod
    def linear(vx, vy, vz=0.0) -> "Motion":
        return Motion(kind="linear", velocity=(vx, vy, vz))

    @staticmethod
    def along(waypoints, speed, loop=True) -> "Motion":
        return Motion(kind="waypoints",
                      waypoints=tuple(tuple(w) for w in waypoints),
                      speed=speed, loop=loop)

    @staticmethod
    def attached(parent_id, offset=(0.0, 0.0, 0.0)) -> "Motion":
        return Motion(kind="attached", parent=parent_id, offset=tuple(offset))


@dataclass(frozen=True)
class WorldObject:
    id: int
    label: str
    color: str
    shape: Shape
    pose: tuple[float, float, float]  # center, robot coordinates, mm
    motion: Motion = field(default_factory=Motion.static)
    height: float = 40.0
    start_pose: tuple[float, float, float] | None = None

    def origin(self) -> tuple[float, float, float]:
        return self.start_pose if self.start_pose is not None else self.pose

    def footprint_contains(self, xy: tuple[float, float], tol: float = 0.0) -> bool:
        return self.shape.contains((xy[0] - self.pose[0], xy[1] - self.pose[1]), tol)

    def fits_jaw(self, limit: float) -> bool:
        hx, hy = self.shape.bbox_half_extent()
        return 2 * hx <= limit and 2 * hy <= limit

    def centroid(self) -> tuple[float, float]:
        return (self.pose[0], self.pose[1])


def _waypoint_pose(motion: Motion, origin, t: float):
    pts = (origin,) + motion.waypoints
    legs = []
    total = 0.0
    for a, b in zip(pts, pts[1:] + ((pts[0],) if motion.loop else ())):
        d = math.dist(a, b)
        legs.append((a, b, d))
        total += d
    if total <= 0:
        return origin
    s = t * motion.speed
    if motion.loop:
        s %= total
    elif s >= total:
        return pts[-1]
    for a, b, d in legs:
        if s <= d:
            if d == 0:
                return a
            f = s / d
            return (a[0] + f * (b[0] - a[0]),
                    a[1] + f * (b[1] - a[1]),
                    a[2] + f * (b[2] - a[2]))
        s -= d
    return pts[0]


@dataclass(frozen=True)
class WorldModel:
    objects: tuple[WorldObject, ...]
    time: float = 0.0
    held_id: int | None = None  # object carried by the robot; scripts skip it

    def __post_init__(self):
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("object ids must be unique")

    def get(self, object_id: int) -> WorldObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)

    def by_label(self, label: str) -> list[WorldObject]:
        return [o for o in self.objects if o.label == label]

    def with_object(self, obj: WorldObject) -> "WorldModel":
        return replace(self, objects=tuple(
            obj if o.id == obj.id else o for o in self.objects))

    def grasp_candidate(self, xy, tol: float, jaw_limit: float):
        """Closest graspable object under the end effector, id tie-break."""
        cands = [o for o in self.objects
                 if o.footprint_contains(xy, tol) and o.fits_jaw(jaw_limit)
                 and o.id != self.held_id]
        if not cands:
            return None
        return min(cands, key=lambda o: (math.dist(o.centroid(), xy), o.id))

    def state_hash(self) -> str:
        """Stable 64-bit hash over object poses (determinism diffs)."""
        h = hashlib.sha256()
        for o in self.objects:
            h.update(f"{o.id}:{o.pose[0]!r},{o.pose[1]!r},{o.pose[2]!r};".encode())
        return h.hexdigest()[:16]


def advance_world(world: WorldModel, dt: float, rng=None) -> WorldModel:
    """Advance every scripted object by dt seconds; deterministic."""
    t = world.time + dt
    moved = {}
    for o in world.objects:
        if o.id == world.held_id or o.motion.kind == "static":
            moved[o.id] = o
            continue
        if o.motion.kind == "linear":
            vx, vy, vz = o.motion.velocity
            ox, oy, oz = o.origin()
            pose = (ox + vx * t, oy + vy * t, oz + vz * t)
            moved[o.id] = replace(o, pose=pose, start_pose=o.origin())
        elif o.motion.kind == "waypoints":
            pose = _waypoint_pose(o.motion, o.origin(), t)
            moved[o.id] = replace(o, pose=pose, start_pose=o.origin())
        else:
            moved[o.id] = o  # attached: resolved below
    for o in world.objects:
        if o.motion.kind == "attached" and o.id != world.held_id:
            parent = moved.get(o.motion.parent)
            if parent is not None:
                off = o.motion.offset
                pose = (parent.pose[0] + off[0], parent.pose[1] + off[1],
                        parent.pose[2] + off[2])
                moved[o.id] = replace(o, pose=pose)
    return replace(world, objects=tuple(moved[o.id] for o in world.objects), time=t)


# ---------------------------------------------------------------------------
# scenario (de)serialization


def shape_to_dict(s: Shape) -> dict:
    return {"kind": s.kind, "dims": list(s.dims)}


def shape_from_dict(d: dict) -> Shape:
    return Shape(kind=d["kind"], dims=tuple(float(v) for v in d["dims"]))


def motion_to_dict(m: Motion) -> dict:
    d = {"kind": m.kind}
    if m.kind == "linear":
        d["velocity"] = list(m.velocity)
    elif m.kind == "waypoints":
        d["waypoints"] = [list(w) for w in m.waypoints]
        d["speed"] = m.speed
        d["loop"] = m.loop
    elif m.kind == "attached":
        d["parent"] = m.parent
        d["offset"] = list(m.offset)
    return d


def motion_from_dict(d: dict) -> Motion:
    kind = d.get("kind", "static")
    if kind == "static":
        return Motion.static()
    if kind == "linear":
        return Motion.linear(*d["velocity"])
    if kind == "waypoints":
        return Motion.along(d["waypoints"], d["speed"], d.get("loop", True))
    if kind == "attached":
        return Motion.attached(d["parent"], d.get("offset", (0, 0, 0)))
    raise ValueError(f"unknown motion kind {kind!r}")


def object_to_dict(o: WorldObject) -> dict:
    return {
        "id": o.id,
        "label": o.label,
        "color": o.color,
        "shape": shape_to_dict(o.shape),
        "pose": list(o.pose),
        "motion": motion_to_dict(o.motion),
        "height": o.height,
    }


def object_from_dict(d: dict) -> WorldObject:
    return WorldObject(
        id=int(d["id"]),
        label=d["label"],
        color=d.get("color", ""),
        shape=shape_from_dict(d["shape"]),
        pose=tuple(float(v) for v in d["pose"]),
        motion=motion_from_dict(d.get("motion", {"kind": "static"})),
        height=float(d.get("height", 40.0)),
    )


def world_to_dict(w: WorldModel) -> dict:
    return {"objects": [object_to_dict(o) for o in w.objects],
            "time": w.time, "held_id": w.held_id}


def world_from_dict(d: dict) -> WorldModel:
    return WorldModel(objects=tuple(object_from_dict(o) for o in d["objects"]),
                      time=d.get("time", 0.0), held_id=d.get("held_id"))
