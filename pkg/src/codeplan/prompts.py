"""Prompt construction: the planning prompt and the state-feedback prompt."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .planlang import (
    HANDS,
    ActionCall,
    AssertBlock,
    Condition,
    PlanProgram,
    render_program,
)
from .world import VERBS, UnknownObject, WorldState, format_fact, id_sort_key, resolve_object

DEFAULT_EXAMPLE_TASKS = (
    "put the wine glass in the kitchen cabinet",
    "throw away the lime",
    "wash mug",
)
PLAN_STOP = ("\n\ndef ",)
ASSERT_STOP = ("\n",)
PLACEMENTS = ("global", "per-function")


class PromptError(ValueError):
    pass


def derive_function_name(task: str) -> str:
    """Snake-case a task instruction: ``"Wash mug"`` -> ``wash_mug``."""
    name = re.sub(r"[^a-z0-9]+", "_", task.lower()).strip("_")
    if not name:
        raise PromptError(f"task {task!r} has no usable characters for a function name")
    if name[0].isdigit():
        name = "task_" + name
    return name


@dataclass(frozen=True)
class PromptSpec:
    actions: tuple[str, ...]
    objects: tuple[str, ...]
    examples: tuple[tuple[str, PlanProgram], ...]
    task: str
    include_comments: bool = True
    include_feedback: bool = True
    object_list_placement: str = "global"
    # objects shown with the examples when they come from another scene
    example_objects: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.examples:
            raise PromptError("at least one example program is required")
        if not self.task.strip():
            raise PromptError("task must be non-empty")
        if self.object_list_placement not in PLACEMENTS:
            raise PromptError(f"object_list_placement must be one of {PLACEMENTS}")


@dataclass(frozen=True)
class PromptText:
    text: str
    stop_sequences: tuple[str, ...]
    header: str

    @property
    def estimated_tokens(self) -> int:
        # rough BPE ratio for code-like English; only used for budgeting
        return max(1, len(self.text) // 4)


def _objects_line(objects) -> str:
    return "objects = [" + ", ".join(f"'{o}'" for o in objects) + "]"


def _calls(program: PlanProgram):
    for st in program.statements:
        if isinstance(st, ActionCall):
            yield st
        elif isinstance(st, AssertBlock):
            yield from st.recovery


def _check_example(task: str, program: PlanProgram, actions, objects, include_feedback: bool):
    allowed = set(actions)
    known = set(objects)
    for call in _calls(program):
        if call.verb not in allowed:
            raise PromptError(f"example {task!r} uses unknown verb {call.verb!r}")
        for arg in call.args:
            if arg not in known:
                raise PromptError(f"example {task!r} uses object {arg!r} missing from the object list")
    if include_feedback:
        for st in program.statements:
            if isinstance(st, AssertBlock):
                for name in st.condition.objects():
                    if name != HANDS and name not in known:
                        raise PromptError(f"example {task!r} asserts on unknown object {name!r}")


def build_plan_prompt(spec: PromptSpec) -> PromptText:
    example_objects = spec.example_objects if spec.example_objects is not None else spec.objects
    per_function = spec.object_list_placement == "per-function"
    blocks = ["from actions import " + ", ".join(spec.actions)]
    if not per_function:
        blocks.append(_objects_line(example_objects))
    for task, program in spec.examples:
        _check_example(task, program, spec.actions, example_objects, spec.include_feedback)
        body = render_program(program, spec.include_comments, spec.include_feedback).rstrip("\n")
        if per_function:
            body = _objects_line(example_objects) + "\n" + body
        blocks.append(body)
    header = f"def {derive_function_name(spec.task)}():"
    if per_function or tuple(example_objects) != tuple(spec.objects):
        blocks.append(_objects_line(spec.objects) + "\n" + header)
    else:
        blocks.append(header)
    return PromptText("\n\n".join(blocks), PLAN_STOP, header)


def _condition_ids(condition: Condition, state: WorldState) -> dict[str, str]:
    ids = {}
    for name in condition.objects():
        if name == HANDS and condition.kind == "in":
            continue
        oid = resolve_object(name, state)
        if oid is None:
            raise UnknownObject(name)
        ids[name] = oid
    return ids


def _mentions(fact, ids) -> bool:
    return any(arg in ids for arg in fact[1:])


def build_assert_prompt(state: WorldState, condition: Condition) -> PromptText:
    """State-graph excerpt for the condition's objects plus the assertion.

    Objects are named by id in both the excerpt and the restated assertion so
    class duplicates cannot be confused.
    """
    mapping = _condition_ids(condition, state)
    ids = sorted(set(mapping.values()), key=id_sort_key)
    lines = ["# state of the relevant objects"]
    for oid in ids:
        props = ", ".join(sorted(state.objects[oid].properties)) or "none"
        lines.append(f"# {oid} is a {state.objects[oid].class_name}; properties: {props}")
    facts = sorted(
        (f for f in state.facts if _mentions(f, ids)),
        key=lambda f: (f[0], tuple(id_sort_key(a) for a in f[1:])),
    )
    for fact in facts:
        if fact[0] == "sitting":
            lines.append(f"sitting(agent, {fact[1]})")
        else:
            lines.append(format_fact(fact))
    if not facts:
        lines.append(f"# no recorded relations for {', '.join(ids)}")
    restated = Condition(
        condition.kind,
        mapping.get(condition.obj, condition.obj),
        mapping.get(condition.arg, condition.arg) if condition.kind in ("in", "on") else condition.arg,
        condition.negated,
    )
    header = f"assert({restated.render()})"
    lines.append("# does the assertion hold? answer True or False")
    lines.append(header)
    return PromptText("\n".join(lines) + "\n", ASSERT_STOP, header)


def default_actions() -> tuple[str, ...]:
    return VERBS
