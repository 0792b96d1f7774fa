"""Closed-loop execution of plan programs against the world model."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable

from .io import atomic_write_text
from .llm import Backend, GatewayError, answer_assertion
from .planlang import (
    HANDS,
    STATE_WORDS,
    ActionCall,
    AssertBlock,
    Comment,
    Condition,
    PlanProgram,
    Statement,
    Unparseable,
    render_statement,
)
from .prompts import build_assert_prompt
from .world import (
    AGENT,
    ARITY,
    Action,
    UnknownObject,
    WorldState,
    apply,
    format_fact,
    is_admissible,
    resolve_object,
)

log = logging.getLogger(__name__)

EXECUTED = "executed"
FAILED = "failed"
SKIPPED_COMMENT = "skipped-comment"
ASSERTION_HELD = "assertion-held"
RECOVERED = "assertion-failed-recovered"
UNRECOVERED = "assertion-failed-unrecovered"
UNPARSEABLE = "unparseable"

ASSERTION_MODES = ("symbolic", "llm")

__all__ = [
    "StepResult", "ExecutionTrace", "execute", "evaluate_condition", "resolve_object",
    "trace_records", "write_trace_jsonl",
]


@dataclass(frozen=True)
class StepResult:
    statement: Statement
    status: str
    state_after: WorldState = field(repr=False)
    reason: str | None = None
    # index into program.statements of the assert this recovery action belongs to
    recovery_of: int | None = None

    @property
    def is_action(self) -> bool:
        """Counts toward executability: action calls, recovery calls, garbage lines."""
        return isinstance(self.statement, (ActionCall, Unparseable))


@dataclass(frozen=True)
class ExecutionTrace:
    task: str
    program: PlanProgram
    steps: tuple[StepResult, ...]
    initial_state: WorldState = field(repr=False)
    final_state: WorldState = field(repr=False)
    generation_truncated: bool = False


def evaluate_condition(condition: Condition, state: WorldState) -> bool:
    """Symbolic truth of an assertion; unknown objects make it False."""
    oid = resolve_object(condition.obj, state)
    if oid is None:
        return False
    if condition.kind == "close_to":
        value = ("close_to", AGENT, oid) in state.relations
    elif condition.kind == "is":
        if condition.arg not in STATE_WORDS:
            return False
        pred, truth = STATE_WORDS[condition.arg]
        value = ((pred, oid) in state.fluents) == truth
    elif condition.kind == "in" and condition.arg == HANDS:
        value = ("holds", AGENT, oid) in state.relations
    else:
        target = resolve_object(condition.arg or "", state)
        if target is None:
            return False
        value = (condition.kind, oid, target) in state.relations
    return value != condition.negated


def _run_call(call: ActionCall, state: WorldState) -> tuple[str, str | None, WorldState]:
    if call.verb not in ARITY:
        return FAILED, "unknown-action", state
    if len(call.args) != ARITY[call.verb]:
        return FAILED, "bad-arity", state
    ids = []
    for name in call.args:
        oid = resolve_object(name, state)
        if oid is None:
            return FAILED, "unknown-object", state
        ids.append(oid)
    action = Action(call.verb, tuple(ids))
    ok, reason = is_admissible(state, action)
    if not ok:
        return FAILED, reason, state
    return EXECUTED, None, apply(state, action)


class _Checker:
    def __init__(self, mode: str, backend: Backend | None, task: str):
        if mode not in ASSERTION_MODES:
            raise ValueError(f"assertion_mode must be one of {ASSERTION_MODES}, got {mode!r}")
        if mode == "llm" and backend is None:
            raise ValueError("assertion_mode='llm' needs a backend")
        self.mode, self.backend, self.task = mode, backend, task

    def __call__(self, condition: Condition, state: WorldState, index: int) -> bool:
        if self.mode == "symbolic":
            return evaluate_condition(condition, state)
        try:
            prompt = build_assert_prompt(state, condition)
        except UnknownObject:
            return False
        try:
            return answer_assertion(self.backend, prompt, seed_tag=f"{self.task}@assert{index}")
        except GatewayError as exc:
            log.warning("assertion check failed (%s); treating as False", exc)
            return False


def execute(program: PlanProgram, initial: WorldState, assertion_mode: str = "symbolic",
            backend: Backend | None = None, task: str = "",
            generation_truncated: bool = False) -> ExecutionTrace:
    """Run every statement in order; failures are recorded, never raised."""
    check = _Checker(assertion_mode, backend, task or program.name)
    state = initial
    steps: list[StepResult] = []
    for index, st in enumerate(program.statements):
        if isinstance(st, Comment):
            steps.append(StepResult(st, SKIPPED_COMMENT, state))
        elif isinstance(st, Unparseable):
            steps.append(StepResult(st, UNPARSEABLE, state, reason=st.diagnostic or "unparseable"))
        elif isinstance(st, ActionCall):
            status, reason, state = _run_call(st, state)
            steps.append(StepResult(st, status, state, reason))
        elif isinstance(st, AssertBlock):
            if check(st.condition, state, index):
                steps.append(StepResult(st, ASSERTION_HELD, state))
                continue
            for call in st.recovery:
                status, reason, state = _run_call(call, state)
                steps.append(StepResult(call, status, state, reason, recovery_of=index))
            held = check(st.condition, state, index)
            steps.append(StepResult(st, RECOVERED if held else UNRECOVERED, state))
        else:
            raise TypeError(f"not a statement: {st!r}")
    return ExecutionTrace(task or program.name, program, tuple(steps), initial, state,
                          generation_truncated)


# -- export ----------------------------------------------------------------

def _kind(st: Statement) -> str:
    return {Comment: "comment", ActionCall: "action", AssertBlock: "assert",
            Unparseable: "unparseable"}[type(st)]


def trace_records(trace: ExecutionTrace) -> Iterable[dict]:
    """One JSON-ready record per step, with the fact delta it caused."""
    prev = trace.initial_state
    for i, step in enumerate(trace.steps):
        before, after = prev.facts, step.state_after.facts
        yield {
            "step": i,
            "line": getattr(step.statement, "line", 0),
            "kind": _kind(step.statement),
            "source": render_statement(step.statement),
            "status": step.status,
            "reason": step.reason,
            "recovery_of": step.recovery_of,
            "added": sorted(format_fact(f) for f in after - before),
            "removed": sorted(format_fact(f) for f in before - after),
            "state_digest": step.state_after.digest(),
        }
        prev = step.state_after


def dumps_trace(trace: ExecutionTrace) -> str:
    return "".join(json.dumps(rec, ensure_ascii=False) + "\n" for rec in trace_records(trace))


def write_trace_jsonl(trace: ExecutionTrace, path) -> None:
    atomic_write_text(path, dumps_trace(trace))
