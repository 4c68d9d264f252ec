"""Episode traces: JSONL serialization and offline replay verification.

One event per line, ``schema_version`` 1.  The first line is a header
carrying the robot spec and filter settings so replay can re-validate
every dispatched frame without the live objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .controller import FilterConfig, check_hardware_constraints, check_task_appropriateness
from .frames import CommandFrame
from .robot import JointState, Pose, forward_kinematics, spec_from_dict

SCHEMA_VERSION = 1

EV_HEADER = "header"
EV_SNAPSHOT = "snapshot_emitted"
EV_CONTEXT = "context_assembled"
EV_OUTPUT = "controller_output"
EV_VERDICT = "verdict"
EV_DISPATCH = "frame_dispatched"
EV_ROBOT = "robot_state"
EV_WORLD_HASH = "world_state_hash"
EV_ACTION = "action_advanced"
EV_END = "episode_end"


class CorruptTrace(ValueError):
    """Trace file that cannot be read or fails basic well-formedness."""


@dataclass
class EpisodeTrace:
    header: dict
    events: list[dict] = field(default_factory=list)

    def add(self, ev: str, tick: int, **payload) -> None:
        payload["ev"] = ev
        payload["tick"] = tick
        self.events.append(payload)

    def last_of(self, ev: str) -> dict | None:
        for e in reversed(self.events):
            if e["ev"] == ev:
                return e
        return None

    def outcome(self) -> str | None:
        end = self.last_of(EV_END)
        return end["outcome"] if end else None

    def sim_time(self) -> float | None:
        end = self.last_of(EV_END)
        return end["sim_time"] if end else None

    def dumps(self) -> str:
        head = dict(self.header)
        head["ev"] = EV_HEADER
        head["schema_version"] = SCHEMA_VERSION
        lines = [json.dumps(head, sort_keys=True, separators=(",", ":"))]
        lines.extend(json.dumps(e, sort_keys=True, separators=(",", ":"))
                     for e in self.events)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())


def loads(text: str) -> EpisodeTrace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CorruptTrace("empty trace")
    try:
        rows = [json.loads(ln) for ln in lines]
    except json.JSONDecodeError as exc:
        raise CorruptTrace(f"bad JSON: {exc}") from None
    head = rows[0]
    if head.get("ev") != EV_HEADER:
        raise CorruptTrace("missing header line")
    if head.get("schema_version") != SCHEMA_VERSION:
        raise CorruptTrace(f"unsupported schema_version {head.get('schema_version')}")
    for r in rows[1:]:
        if "ev" not in r or "tick" not in r:
            raise CorruptTrace("event without ev/tick")
    return EpisodeTrace(header=head, events=rows[1:])


def read(path) -> EpisodeTrace:
    try:
        with open(path) as fh:
            return loads(fh.read())
    except OSError as exc:
        raise CorruptTrace(str(exc)) from None


def frame_to_list(f: CommandFrame) -> list:
    return [f.frame_type, f.x, f.y, f.z, f.rotation, f.grip_a, f.grip_b]


def frame_from_list(v) -> CommandFrame:
    return CommandFrame(frame_type=int(v[0]), x=float(v[1]), y=float(v[2]),
                        z=float(v[3]), rotation=float(v[4]),
                        grip_a=int(v[5]), grip_b=int(v[6]))


@dataclass
class ReplayReport:
    violations: list[dict] = field(default_factory=list)
    events_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        return (f"{len(self.violations)} violations over "
                f"{self.events_checked} events")


def replay(trace: EpisodeTrace) -> ReplayReport:
    """Re-validate trace invariants offline.

    Checks: monotone tick ordering, dispatched-implies-accepted, filter
    soundness re-derived on every dispatched frame (one violation entry at
    most per dispatch), FK/pose consistency, tracklet lengths, FOV
    soundness of recorded detections, terminal episode_end event.
    """
    report = ReplayReport()
    spec = spec_from_dict(trace.header.get("robot", {}))
    fcfg = FilterConfig(
        max_delta_mm=trace.header.get("max_delta_mm", 100.0),
        max_grip_toggles=trace.header.get("max_grip_toggles", 1),
    )
    noise_sigma = trace.header.get("noise_sigma", 0.0)

    def flag(kind, tick, **info):
        report.violations.append({"kind": kind, "tick": tick, **info})

    last_tick = -1
    prev_dispatched = None
    accepted_at_tick = None
    for e in trace.events:
        report.events_checked += 1
        ev, tick = e["ev"], e["tick"]
        if tick < last_tick:
            flag("event_order", tick)
        last_tick = tick
        if ev == EV_VERDICT and e["accepted"]:
            accepted_at_tick = tick
        elif ev == EV_DISPATCH:
            if accepted_at_tick != tick:
                flag("dispatch_without_acceptance", tick)
            frame = frame_from_list(e["frame"])
            if not frame.is_valid():
                flag("filter_soundness", tick, reason="malformed_structure")
            elif not check_hardware_constraints(frame, spec):
                flag("filter_soundness", tick, reason="hardware_limit")
            elif not check_task_appropriateness(frame, prev_dispatched, fcfg):
                flag("filter_soundness", tick, reason="excessive_delta")
            prev_dispatched = frame
        elif ev == EV_ROBOT:
            joints = JointState(tuple(e["joints"]))
            pose = forward_kinematics(spec, joints)
            px, py, pz = e["pose"][:3]
            err = Pose(px, py, pz).distance_xyz(pose)
            if err > 1e-6:
                flag("fk_consistency", tick, error_mm=err)
        elif ev == EV_SNAPSHOT:
            for t in e.get("tracklets", []):
                if len(t[1]) != 4:
                    flag("tracklet_length", tick, track_id=t[0])
            fov = e.get("fov")
            if fov:
                slack = 6.0 * noise_sigma + 1e-9
                for d in e.get("detections", []):
                    cx, cy, hx, hy = d[2], d[3], d[4], d[5]
                    if (cx + hx < fov[0] - slack or cx - hx > fov[2] + slack
                            or cy + hy < fov[1] - slack or cy - hy > fov[3] + slack):
                        flag("fov_soundness", tick, object_id=d[0])
    if not trace.events or trace.events[-1]["ev"] != EV_END:
        flag("missing_episode_end", last_tick)
    return report
