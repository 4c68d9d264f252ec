"""Simulated perception: detections, polygons, tracklets, projection.

Geometry-level stand-in for a detector/segmenter/tracker stack, exposing
the same output contracts: axis-aligned boxes, <=4-vertex polygons, and
4-point tracklets (current frame plus three past frames).  A top-down
orthographic camera maps an axis-aligned field-of-view rectangle in the
robot xy-plane affinely onto image pixels with a bottom-left origin.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .world import WorldModel, WorldObject

TRACKLET_LEN = 4
DEFAULT_GATE_MM = 50.0


@dataclass(frozen=True)
class CameraModel:
    displacement: tuple[float, float, float] = (0.0, 0.0, 1000.0)
    fov_size: tuple[float, float] = (800.0, 800.0)  # mm in robot xy
    resolution: tuple[int, int] = (800, 800)  # px
    dropout_prob: float = 0.0
    noise_sigma: float = 0.0
    attach_to_effector: bool = False  # fov translates with the end effector

    def __post_init__(self):
        if self.fov_size[0] <= 0 or self.fov_size[1] <= 0:
            raise ValueError("fov must have positive area")
        if not 0.0 <= self.dropout_prob < 1.0:
            raise ValueError("dropout_prob must be in [0, 1)")

    def scale(self) -> tuple[float, float]:
        """mm per pixel."""
        return (self.fov_size[0] / self.resolution[0],
                self.fov_size[1] / self.resolution[1])

    def fov_origin(self, ee_xy=(0.0, 0.0)) -> tuple[float, float]:
        ox, oy = self.displacement[0], self.displacement[1]
        if self.attach_to_effector:
            ox += ee_xy[0]
            oy += ee_xy[1]
        return (ox, oy)

    def fov_rect(self, ee_xy=(0.0, 0.0)) -> tuple[float, float, float, float]:
        ox, oy = self.fov_origin(ee_xy)
        return (ox, oy, ox + self.fov_size[0], oy + self.fov_size[1])


def project_to_robot(point_px: tuple[float, float], camera: CameraModel,
                     ee_xy=(0.0, 0.0)) -> tuple[float, float]:
    """Pixel -> robot mm: fixed affine scale plus the known displacement."""
    sx, sy = camera.scale()
    ox, oy = camera.fov_origin(ee_xy)
    return (point_px[0] * sx + ox, point_px[1] * sy + oy)


def unproject_from_robot(point_mm: tuple[float, float], camera: CameraModel,
                         ee_xy=(0.0, 0.0)) -> tuple[float, float]:
    sx, sy = camera.scale()
    ox, oy = camera.fov_origin(ee_xy)
    return ((point_mm[0] - ox) / sx, (point_mm[1] - oy) / sy)


@dataclass(frozen=True)
class Detection:
    object_id: int  # simulator ground truth; the tracker must not use it
    label: str
    bbox_px: tuple[tuple[float, float], ...]  # 4 corners, image px
    centroid_mm: tuple[float, float]  # jittered, robot coords
    half_extent_mm: tuple[float, float]


@dataclass(frozen=True)
class Tracklet:
    track_id: int
    points_mm: tuple[tuple[float, float], ...]  # exactly 4, oldest first

    def __post_init__(self):
        if len(self.points_mm) != TRACKLET_LEN:
            raise ValueError("tracklets carry exactly 4 points")


@dataclass(frozen=True)
class SceneSnapshot:
    tick: int
    detections: tuple[Detection, ...]
    polygons: tuple[tuple[str, tuple[tuple[float, float], ...]], ...]  # px
    polygons_mm: tuple[tuple[int, str, tuple[tuple[float, float], ...]], ...]
    tracklets: tuple[Tracklet, ...]
    visible_ids: frozenset[int]


def render_detections(world: WorldModel, camera: CameraModel, rng,
                      ee_xy=(0.0, 0.0), labels=None) -> list[Detection]:
    """Boxes for objects intersecting the fov; absent objects force search.

    Draws one rng sample per candidate object per tick regardless of
    dropout configuration so enabling dropout never perturbs the rest of
    the random stream.
    """
    x0, y0, x1, y1 = camera.fov_rect(ee_xy)
    out = []
    for obj in world.objects:
        if labels is not None and obj.label not in labels:
            continue
        hx, hy = obj.shape.bbox_half_extent()
        cx, cy = obj.pose[0], obj.pose[1]
        if cx + hx < x0 or cx - hx > x1 or cy + hy < y0 or cy - hy > y1:
            continue
        drop = rng.random() < camera.dropout_prob
        if drop:
            continue
        if camera.noise_sigma > 0:
            cx += rng.gauss(0.0, camera.noise_sigma)
            cy += rng.gauss(0.0, camera.noise_sigma)
        corners_mm = ((cx - hx, cy - hy), (cx + hx, cy - hy),
                      (cx + hx, cy + hy), (cx - hx, cy + hy))
        bbox_px = tuple(unproject_from_robot(c, camera, ee_xy) for c in corners_mm)
        out.append(Detection(object_id=obj.id, label=obj.label, bbox_px=bbox_px,
                             centroid_mm=(cx, cy), half_extent_mm=(hx, hy)))
    return out


def _convex_hull(points):
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _poly_area(verts):
    s = 0.0
    for (x1, y1), (x2, y2) in zip(verts, verts[1:] + verts[:1]):
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def simplify_polygon(verts, max_vertices=4):
    """Largest-area subset of the hull with at most max_vertices corners."""
    hull = _convex_hull(verts)
    if len(hull) <= max_vertices:
        return tuple(hull)
    best, best_area = None, -1.0
    for combo in itertools.combinations(range(len(hull)), max_vertices):
        cand = [hull[i] for i in combo]  # hull order is preserved
        a = _poly_area(cand)
        if a > best_area:
            best, best_area = cand, a
    return tuple(best)


def segment(detection: Detection, obj: WorldObject, max_vertices=4):
    """Silhouette polygon in robot mm, simplified, inside the bbox.

    Circles reduce to the inscribed square (vertices on the axes), which is
    the maximum-area 4-gon inside a disc; rectangles keep their corners.
    """
    cx, cy = detection.centroid_mm
    if obj.shape.kind == "circle":
        r = obj.shape.dims[0]
        local = ((r, 0.0), (0.0, r), (-r, 0.0), (0.0, -r))[:max(3, max_vertices)]
    else:
        local = simplify_polygon(list(obj.shape.local_vertices()), max_vertices)
    return tuple((cx + lx, cy + ly) for lx, ly in local)


def track(history, gate_mm: float = DEFAULT_GATE_MM) -> list[Tracklet]:
    """Associate detections across the last <=4 frames by nearest centroid.

    history: detection lists ordered oldest -> newest.  A track missing
    from one frame coasts at its last position; missing twice it is
    dropped.  Output points are padded by repeating the oldest position so
    every tracklet has exactly 4 points.
    """
    frames = list(history)[-TRACKLET_LEN:]
    if not frames:
        return []
    tracks = []  # (id, points, misses)
    next_id = 0
    for det in frames[0]:
        tracks.append([next_id, [det.centroid_mm], 0])
        next_id += 1
    for dets in frames[1:]:
        unmatched = list(range(len(dets)))
        pairs = []
        for ti, tr in enumerate(tracks):
            last = tr[1][-1]
            for di in unmatched:
                d = math.dist(last, dets[di].centroid_mm)
                if d <= gate_mm:
                    pairs.append((d, ti, di))
        pairs.sort()
        used_t, used_d = set(), set()
        for d, ti, di in pairs:
            if ti in used_t or di in used_d:
                continue
            used_t.add(ti)
            used_d.add(di)
            tracks[ti][1].append(dets[di].centroid_mm)
            tracks[ti][2] = 0
        survivors = []
        for ti, tr in enumerate(tracks):
            if ti not in used_t:
                tr[2] += 1
                if tr[2] > 1:
                    continue
                tr[1].append(tr[1][-1])  # coast
            survivors.append(tr)
        tracks = survivors
        for di, det in enumerate(dets):
            if di not in used_d:
                tracks.append([next_id, [det.centroid_mm], 0])
                next_id += 1
    out = []
    for tid, pts, _ in tracks:
        pts = pts[-TRACKLET_LEN:]
        while len(pts) < TRACKLET_LEN:
            pts = [pts[0]] + pts
        out.append(Tracklet(track_id=tid, points_mm=tuple(pts)))
    return out


def perceive(world: WorldModel, camera: CameraModel, rng, tick: int,
             history=None, labels=None, ee_xy=(0.0, 0.0),
             use_polygons: bool = True, use_tracking: bool = True,
             gate_mm: float = DEFAULT_GATE_MM) -> SceneSnapshot:
    """One perception tick assembling the full snapshot."""
    dets = render_detections(world, camera, rng, ee_xy, labels)
    polys_px = []
    polys_mm = []
    for det in dets:
        obj = world.get(det.object_id)
        if use_polygons:
            poly_mm = segment(det, obj)
        else:
            # segmentation ablation: fall back to the bbox corners
            cx, cy = det.centroid_mm
            hx, hy = det.half_extent_mm
            poly_mm = ((cx - hx, cy - hy), (cx + hx, cy - hy),
                       (cx + hx, cy + hy), (cx - hx, cy + hy))
        polys_mm.append((det.object_id, det.label, poly_mm))
        polys_px.append((det.label, tuple(
            unproject_from_robot(p, camera, ee_xy) for p in poly_mm)))
    tracklets = ()
    if use_tracking:
        hist = list(history or []) + [dets]
        tracklets = tuple(track(hist, gate_mm))
    return SceneSnapshot(
        tick=tick,
        detections=tuple(dets),
        polygons=tuple(polys_px),
        polygons_mm=tuple(polys_mm),
        tracklets=tracklets,
        visible_ids=frozenset(d.object_id for d in dets),
    )


def scene_to_text(snapshot: SceneSnapshot, object_filter=None) -> str:
    """Render visible objects as controller-context lines.

    One line per object, ascending id:
    ``Input: <label> at [(x1, y1), (x2, y2), (x3, y3), (x4, y4)]``
    with polygon vertices in robot coordinates rounded to integers.
    """
    lines = []
    for oid, label, poly in sorted(snapshot.polygons_mm, key=lambda t: t[0]):
        if object_filter is not None and label not in object_filter:
            continue
        pts = ", ".join(f"({round(x)}, {round(y)})" for x, y in poly)
        lines.append(f"Input: {label} at [{pts}]")
    return "\n".join(lines)
