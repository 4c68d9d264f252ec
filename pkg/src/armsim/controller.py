"""Controller assembly, pluggable backends, and the pre-execution filter.

The controller context is a deterministic concatenation of a limits
header, the fixed 11-example catalog (5 basic movement / 3 pick-and-move /
3 interaction), recycled negative examples, scene text, robot state text,
and the current atomic action.  The filter gates parsed outputs through
three checks in order: structure, hardware limits, task appropriateness.
"""

from __future__ import annotations

import importlib.resources
import json
import os
import time
from dataclasses import dataclass, field, replace

from .frames import (CommandFrame, ControllerOutput, MalformedFrame,
                     EmptyOutput, PERMISSIVE, parse_controller_text)
from .robot import RobotSpec, RobotState, is_reachable

CAT_BASIC = "basic_movement"
CAT_PICK = "pick_move"
CAT_INTERACTION = "interaction"
CATALOG_COUNTS = {CAT_BASIC: 5, CAT_PICK: 3, CAT_INTERACTION: 3}

REASON_NONE = "none"
REASON_STRUCTURE = "malformed_structure"
REASON_HARDWARE = "hardware_limit"
REASON_DELTA = "excessive_delta"

DEFAULT_MAX_DELTA_MM = 100.0
DEFAULT_NEGATIVES_CAP = 5


class BackendFailure(RuntimeError):
    """Controller backend could not produce a reply."""


@dataclass(frozen=True)
class ContextExample:
    category: str
    text: str


def load_catalog() -> tuple[ContextExample, ...]:
    raw = importlib.resources.files("armsim.data").joinpath(
        "context_examples.json").read_text()
    catalog = tuple(ContextExample(**d) for d in json.loads(raw))
    counts = {c: sum(1 for e in catalog if e.category == c) for c in CATALOG_COUNTS}
    if counts != CATALOG_COUNTS:
        raise ValueError(f"catalog counts {counts} != {CATALOG_COUNTS}")
    return catalog


def limits_header(spec: RobotSpec) -> str:
    r = spec.workspace_radius
    return (f"Robot limits: Max x: {r:g}, Max y: {r:g}, Max z: {spec.z_max:g}, "
            f"Min x: {-r:g}, Min y: {-r:g}, Min z: {spec.z_min:g}. "
            "Frame structure: [type, x, y, z, rotation, grip_a, grip_b].")


def robot_state_text(state: RobotState, spec: RobotSpec) -> str:
    pose = state.pose(spec)
    held = f"object {state.holding}" if state.holding is not None else "nothing"
    return (f"Robot state: position [{pose.x:.1f}, {pose.y:.1f}, {pose.z:.1f}], "
            f"rotation {pose.rotation:.1f}, gripper {state.gripper}, holding {held}.")


@dataclass(frozen=True)
class ControllerContext:
    limits_header: str
    examples: tuple[ContextExample, ...]
    atomic_action: str = ""
    scene_text: str = ""
    robot_state_text: str = ""
    negatives: tuple[tuple[str, str], ...] = ()  # (rejected raw text, reason)
    negatives_cap: int = DEFAULT_NEGATIVES_CAP


def make_context(spec: RobotSpec, drop_basic=False, drop_pick=False,
                 drop_interaction=False,
                 negatives_cap=DEFAULT_NEGATIVES_CAP) -> ControllerContext:
    dropped = set()
    if drop_basic:
        dropped.add(CAT_BASIC)
    if drop_pick:
        dropped.add(CAT_PICK)
    if drop_interaction:
        dropped.add(CAT_INTERACTION)
    examples = tuple(e for e in load_catalog() if e.category not in dropped)
    return ControllerContext(limits_header=limits_header(spec),
                             examples=examples, negatives_cap=negatives_cap)


def assemble_context(ctx: ControllerContext) -> str:
    """Deterministic concatenation; byte-identical for equal inputs."""
    parts = [ctx.limits_header]
    parts.extend(e.text for e in ctx.examples)
    parts.extend(f"REJECTED: {raw} ({reason})" for raw, reason in ctx.negatives)
    if ctx.scene_text:
        parts.append(ctx.scene_text)
    if ctx.robot_state_text:
        parts.append(ctx.robot_state_text)
    parts.append(f"Atomic action: {ctx.atomic_action}")
    return "\n\n".join(parts)


# ---------------------------------------------------------------------------
# pre-execution filter


@dataclass(frozen=True)
class FilterConfig:
    max_delta_mm: float = DEFAULT_MAX_DELTA_MM
    max_grip_toggles: int = 1


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    reason: str
    frame: CommandFrame | None
    raw_text: str = ""


def check_structure(output: ControllerOutput) -> bool:
    """At least one canonical frame, or a pure halt."""
    if output.is_pure_halt:
        return True
    if not output.frames:
        return False
    return output.frames[0].is_valid()


def check_hardware_constraints(frame: CommandFrame, spec: RobotSpec) -> bool:
    r = spec.workspace_radius
    if not (-r <= frame.x <= r and -r <= frame.y <= r):
        return False
    if not (spec.z_min <= frame.z <= spec.z_max):
        return False
    return is_reachable(spec, (frame.x, frame.y, frame.z))


def check_task_appropriateness(frame: CommandFrame,
                               previous: CommandFrame | None,
                               config: FilterConfig = FilterConfig()) -> bool:
    if previous is None:
        return True
    if (abs(frame.x - previous.x) > config.max_delta_mm
            or abs(frame.y - previous.y) > config.max_delta_mm
            or abs(frame.z - previous.z) > config.max_delta_mm):
        return False
    toggles = (frame.grip_a != previous.grip_a) + (frame.grip_b != previous.grip_b)
    return toggles <= config.max_grip_toggles


def pre_execution_filter(output: ControllerOutput, spec: RobotSpec,
                         previous: CommandFrame | None = None,
                         config: FilterConfig = FilterConfig()) -> FilterVerdict:
    """Three checks in order on the first actionable frame; first failure wins."""
    if not check_structure(output):
        return FilterVerdict(False, REASON_STRUCTURE, None, output.raw_text)
    if output.is_pure_halt:
        return FilterVerdict(True, REASON_NONE, None, output.raw_text)
    frame = output.frames[0]
    if not check_hardware_constraints(frame, spec):
        return FilterVerdict(False, REASON_HARDWARE, None, output.raw_text)
    if not check_task_appropriateness(frame, previous, config):
        return FilterVerdict(False, REASON_DELTA, None, output.raw_text)
    return FilterVerdict(True, REASON_NONE, frame, output.raw_text)


def filter_raw_text(text: str, spec: RobotSpec,
                    previous: CommandFrame | None = None,
                    config: FilterConfig = FilterConfig(),
                    mode: str = PERMISSIVE):
    """Parse then filter; parser errors map to structural rejection."""
    try:
        output = parse_controller_text(text, mode)
    except (MalformedFrame, EmptyOutput):
        return FilterVerdict(False, REASON_STRUCTURE, None, text), None
    return pre_execution_filter(output, spec, previous, config), output


def recycle(verdict: FilterVerdict, ctx: ControllerContext) -> ControllerContext:
    """Append a rejected output as a negative example, oldest evicted."""
    if verdict.accepted:
        raise ValueError("only rejected verdicts are recycled")
    negatives = ctx.negatives + ((verdict.raw_text, verdict.reason),)
    if len(negatives) > ctx.negatives_cap:
        negatives = negatives[-ctx.negatives_cap:]
    return replace(ctx, negatives=negatives)


# ---------------------------------------------------------------------------
# backends


class MockScripted:
    """Deterministic table backend: reply per call index (last one repeats)."""

    def __init__(self, replies):
        if not replies:
            raise ValueError("need at least one scripted reply")
        self.replies = list(replies)
        self.calls = 0

    def query(self, context: str) -> str:
        reply = self.replies[min(self.calls, len(self.replies) - 1)]
        self.calls += 1
        return reply


class HttpChat:
    """Generic JSON-over-HTTP chat-completion backend.

    Bounded retries on transport failure; temperature defaults to 0 for
    reproducibility; the credential comes from an environment variable.
    """

    def __init__(self, base_url: str, model: str, temperature: float = 0.0,
                 api_key_env: str = "ARMSIM_API_KEY", retries: int = 2,
                 timeout: float = 30.0, transport=None):
        key = os.environ.get(api_key_env)
        if not key:
            raise BackendFailure(
                f"no API credential: set the {api_key_env} environment variable")
        import httpx

        self.base_url = base_url.rstrip("/")
        self.model = model
        self.temperature = temperature
        self.retries = retries
        self._client = httpx.Client(
            timeout=timeout,
            headers={"Authorization": f"Bearer {key}"},
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def query(self, context: str) -> str:
        import httpx

        payload = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": context}],
        }
        last_error = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(
                    f"{self.base_url}/chat/completions", json=payload)
                if resp.status_code >= 500:
                    last_error = f"server error {resp.status_code}"
                    continue
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except httpx.HTTPError as exc:
                last_error = str(exc)
                if attempt < self.retries:
                    time.sleep(min(0.2 * (attempt + 1), 1.0))
        raise BackendFailure(f"chat endpoint failed after retries: {last_error}")
