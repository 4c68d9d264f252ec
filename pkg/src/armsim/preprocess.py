"""Prompt pre-processing: two backend passes produce a TaskPlan.

Pass 1 decomposes the user prompt into an ordered numbered list of atomic
actions terminated by "done"; pass 2 extracts the object vocabulary that
focuses perception.  Templates ship as data files so non-LLM backends can
ignore their wording.
"""

from __future__ import annotations

import importlib.resources
import re
from dataclasses import dataclass


class UnparseableDecomposition(ValueError):
    """Backend reply contained no numbered action list."""


class EmptyObjectSet(ValueError):
    """Backend reply named no objects; caller may fall back to all-object perception."""


class PlanInvariantViolation(ValueError):
    """Actions reference objects missing from the extracted vocabulary."""


@dataclass(frozen=True)
class AtomicAction:
    index: int  # contiguous from 1
    verb_phrase: str
    referenced_objects: tuple[str, ...] = ()


@dataclass(frozen=True)
class TaskPlan:
    user_prompt: str
    actions: tuple[AtomicAction, ...]  # terminal "done" stripped
    objects: frozenset[str]
    raw_decomposition: str = ""


def _load_template(name: str) -> str:
    return importlib.resources.files("armsim.data").joinpath(name).read_text()


def decomposition_prompt(prompt: str) -> str:
    return _load_template("decompose_template.txt").format(user_prompt=prompt)


def extraction_prompt(prompt: str) -> str:
    return _load_template("extract_objects_template.txt").format(user_prompt=prompt)


_ITEM_RE = re.compile(r"(\d+)\s*\.\s*([^,\n]+)")


def parse_numbered_list(text: str) -> list[str]:
    items = [(int(n), phrase.strip().rstrip(".").strip())
             for n, phrase in _ITEM_RE.findall(text)]
    if not items:
        raise UnparseableDecomposition(f"no numbered list in {text!r}")
    items.sort(key=lambda t: t[0])
    return [phrase for _, phrase in items if phrase]


def decompose(prompt: str, backend) -> list[AtomicAction]:
    """Pass 1: ordered atomic actions, order preserved verbatim."""
    if not prompt:
        raise ValueError("prompt must be non-empty")
    reply = backend.query(decomposition_prompt(prompt))
    phrases = parse_numbered_list(reply)
    return [AtomicAction(index=i + 1, verb_phrase=p)
            for i, p in enumerate(phrases)]


def extract_objects(prompt: str, backend) -> frozenset[str]:
    """Pass 2: deduplicated lowercase object vocabulary."""
    if not prompt:
        raise ValueError("prompt must be non-empty")
    reply = backend.query(extraction_prompt(prompt))
    labels = frozenset(
        tok.strip().lower() for tok in reply.replace("\n", ",").split(",")
        if tok.strip()
    )
    if not labels:
        raise EmptyObjectSet(f"no objects in {reply!r}")
    return labels


def _referenced(phrase: str, vocabulary: frozenset[str]) -> tuple[str, ...]:
    low = phrase.lower()
    return tuple(sorted(lbl for lbl in vocabulary if lbl in low))


def build_plan(prompt: str, backend) -> TaskPlan:
    """Compose the two passes (exactly two backend calls)."""
    actions = decompose(prompt, backend)
    objects = extract_objects(prompt, backend)
    raw = "; ".join(f"{a.index}. {a.verb_phrase}" for a in actions)
    executable = []
    for a in actions:
        if a.verb_phrase.lower() == "done":
            continue
        executable.append(AtomicAction(
            index=len(executable) + 1,
            verb_phrase=a.verb_phrase,
            referenced_objects=_referenced(a.verb_phrase, objects),
        ))
    plan = TaskPlan(user_prompt=prompt, actions=tuple(executable),
                    objects=objects, raw_decomposition=raw)
    for a in plan.actions:
        if not set(a.referenced_objects) <= plan.objects:
            raise PlanInvariantViolation(a.verb_phrase)
    return plan
