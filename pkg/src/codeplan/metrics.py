"""Goal conditions and the SR / Exec / GCR metrics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .interpreter import EXECUTED, ExecutionTrace
from .world import WorldState, format_fact

log = logging.getLogger(__name__)

# agent pose and grasp are instrumental, never goals
EXCLUDED_FROM_GOALS = frozenset({"close_to", "holds"})


class SceneMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GoalCondition:
    predicate: str
    args: tuple[str, ...]
    positive: bool = True

    @property
    def fact(self) -> tuple:
        return (self.predicate, *self.args)

    def satisfied(self, state: WorldState) -> bool:
        return (self.fact in state.facts) == self.positive

    def __str__(self) -> str:
        text = format_fact(self.fact)
        return text if self.positive else f"not {text}"


def task_relevant_conditions(initial: WorldState, demo_final: WorldState) -> frozenset[GoalCondition]:
    """Polarized facts that differ between a demonstration's first and last state."""
    if set(initial.objects) != set(demo_final.objects):
        raise SceneMismatch("initial and final states are over different object sets")
    before = {f for f in initial.facts if f[0] not in EXCLUDED_FROM_GOALS}
    after = {f for f in demo_final.facts if f[0] not in EXCLUDED_FROM_GOALS}
    return frozenset(
        [GoalCondition(f[0], tuple(f[1:]), True) for f in after - before]
        + [GoalCondition(f[0], tuple(f[1:]), False) for f in before - after]
    )


def gcr(goal: Iterable[GoalCondition], achieved: WorldState) -> float:
    goal = list(goal)
    if not goal:
        log.warning("empty goal set; GCR defined as 1.0")
        return 1.0
    unsatisfied = sum(1 for c in goal if not c.satisfied(achieved))
    return (len(goal) - unsatisfied) / len(goal)


def success(goal: Iterable[GoalCondition], achieved: WorldState) -> int:
    return 1 if gcr(goal, achieved) == 1.0 else 0


def exec_fraction(trace: ExecutionTrace) -> float:
    """Executed share of action-like steps (calls, recovery calls, garbage lines)."""
    actions = [s for s in trace.steps if s.is_action]
    if not actions:
        log.warning("plan for %r has no actions; Exec defined as 1.0", trace.task)
        return 1.0
    return sum(1 for s in actions if s.status == EXECUTED) / len(actions)


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float
    n: int

    @classmethod
    def of(cls, values: Sequence[float]) -> "Stat":
        """Mean and population standard deviation, the ± convention of the tables."""
        values = list(values)
        if not values:
            return cls(math.nan, math.nan, 0)
        mean = math.fsum(values) / len(values)
        var = math.fsum((v - mean) ** 2 for v in values) / len(values)
        return cls(mean, math.sqrt(var), len(values))

    def fmt(self) -> str:
        if self.n == 0:
            return "-"
        # -0.00 would otherwise show up for tiny negative rounding
        return f"{self.mean + 0.0:.2f}±{self.std + 0.0:.2f}"
