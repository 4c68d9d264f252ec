"""Command-frame grammar: parse, serialize, validate.

The controller emits text containing bracketed 7-field motion frames
``[type, x, y, z, rotation, grip_a, grip_b]`` optionally followed by a
standalone one-element halt bracket ``[0]`` or ``[1]``.  Everything here is
a pure function over immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

STRICT = "strict"
PERMISSIVE = "permissive"

EXECUTION_MARKER = "Execution Step:"


class MalformedFrame(ValueError):
    """Frame text that cannot be read as the canonical 7-field grammar."""


class EmptyOutput(ValueError):
    """Controller text containing neither a frame nor a halt signal."""


@dataclass(frozen=True)
class CommandFrame:
    frame_type: int
    x: float
    y: float
    z: float
    rotation: float
    grip_a: int
    grip_b: int = 0

    def is_valid(self) -> bool:
        """Invariant check: non-negative integer type, binary grips, finite coords."""
        if not (isinstance(self.frame_type, int) and self.frame_type >= 0):
            return False
        if self.grip_a not in (0, 1) or self.grip_b not in (0, 1):
            return False
        return all(math.isfinite(v) for v in (self.x, self.y, self.z, self.rotation))

    def fields(self) -> tuple:
        return (self.frame_type, self.x, self.y, self.z, self.rotation,
                self.grip_a, self.grip_b)


@dataclass(frozen=True)
class ControllerOutput:
    frames: tuple[CommandFrame, ...]
    halt: int
    raw_text: str

    @property
    def is_pure_halt(self) -> bool:
        return self.halt == 1 and not self.frames


def _fmt(v) -> str:
    if isinstance(v, int):
        return str(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def serialize_frame(frame: CommandFrame) -> str:
    """Canonical text form; parse(serialize(f)) reproduces f exactly."""
    return "[" + ", ".join(_fmt(v) for v in frame.fields()) + "]"


def serialize_output(output: ControllerOutput) -> str:
    parts = [serialize_frame(f) for f in output.frames]
    if output.halt:
        parts.append("[1]")
    return ", ".join(parts)


def _extract_groups(text: str) -> list[str]:
    """Return the contents of top-level bracket pairs; reject imbalance/nesting."""
    groups = []
    depth = 0
    start = -1
    for i, ch in enumerate(text):
        if ch == "[":
            depth += 1
            if depth > 1:
                raise MalformedFrame("nested brackets")
            start = i + 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise MalformedFrame("unbalanced brackets")
            groups.append(text[start:i])
    if depth != 0:
        raise MalformedFrame("unbalanced brackets")
    return groups


def _number(tok: str):
    tok = tok.strip()
    try:
        f = float(tok)
    except ValueError:
        raise MalformedFrame(f"non-numeric field {tok!r}") from None
    if not math.isfinite(f):
        raise MalformedFrame(f"non-finite field {tok!r}")
    return f


def _to_int(v: float, what: str) -> int:
    if v != int(v):
        raise MalformedFrame(f"{what} must be an integer, got {v}")
    return int(v)


def parse_controller_text(text: str, mode: str = STRICT) -> ControllerOutput:
    """Extract frames and the halt signal from raw controller text.

    Only brackets after the last ``Execution Step:`` marker count.  A
    trailing one-element ``[0]``/``[1]`` bracket is the halt signal; halt
    defaults to 0 when absent.  In permissive mode a 6-field frame gets
    ``grip_b = 0`` appended; in strict mode it is malformed.
    """
    if mode not in (STRICT, PERMISSIVE):
        raise ValueError(f"unknown mode {mode!r}")
    body = text
    idx = text.rfind(EXECUTION_MARKER)
    if idx >= 0:
        body = text[idx + len(EXECUTION_MARKER):]
    groups = _extract_groups(body)

    halt = 0
    if groups:
        last = groups[-1].strip()
        if "," not in last and last in ("0", "1"):
            halt = int(last)
            groups = groups[:-1]

    frames = []
    for g in groups:
        vals = [_number(tok) for tok in g.split(",")]
        if len(vals) == 6:
            if mode == STRICT:
                raise MalformedFrame("6-field frame in strict mode")
            vals.append(0.0)
        if len(vals) != 7:
            raise MalformedFrame(f"frame arity {len(vals)}, expected 7")
        frames.append(CommandFrame(
            frame_type=_to_int(vals[0], "frame type"),
            x=vals[1], y=vals[2], z=vals[3], rotation=vals[4],
            grip_a=_to_int(vals[5], "grip_a"),
            grip_b=_to_int(vals[6], "grip_b"),
        ))

    if not frames and not halt:
        raise EmptyOutput("no frame and no halt signal found")
    return ControllerOutput(frames=tuple(frames), halt=halt, raw_text=text)
