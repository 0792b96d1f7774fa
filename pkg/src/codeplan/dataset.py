"""Task datasets: instructions paired with scenes and ground-truth plans.

A dataset file is a JSON list of records::

    [{"instruction": "throw away apple",
      "scene": "scenes/env0.json",
      "demo_plan": ["def throw_away_apple():", "    find('apple')", ...]}]

``scene`` is relative to the dataset file; ``demo_plan`` is a string or a
list of lines.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .interpreter import execute
from .metrics import GoalCondition, exec_fraction, gcr, task_relevant_conditions
from .planlang import PlanProgram, parse_program
from .prompts import derive_function_name
from .scene import Scene, load_scene

_RECORD_KEYS = {"instruction", "scene", "demo_plan"}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    instruction: str
    scene: Scene
    demo_plan: PlanProgram
    goal: frozenset[GoalCondition]

    @property
    def function_name(self) -> str:
        return derive_function_name(self.instruction)

    @property
    def plan_length(self) -> int:
        return len(self.demo_plan.actions())


def make_task(instruction: str, scene: Scene, demo_plan: PlanProgram) -> TaskSpec:
    """Run the demo, check it fully executes and derive the goal set."""
    trace = execute(demo_plan, scene.state, task=instruction)
    ex = exec_fraction(trace)
    if ex != 1.0:
        bad = [s for s in trace.steps if s.is_action and s.status != "executed"]
        raise DatasetError(
            f"demo for {instruction!r} does not fully execute in {scene.name} "
            f"(Exec {ex:.2f}; first failure: {bad[0].statement} -> {bad[0].reason})"
        )
    goal = task_relevant_conditions(scene.state, trace.final_state)
    if gcr(goal, trace.final_state) != 1.0:
        raise DatasetError(f"demo for {instruction!r} does not reach its own goal")
    return TaskSpec(instruction, scene, demo_plan, goal)


def load_dataset(path: str | os.PathLike, scene_override: str | os.PathLike | None = None) -> list[TaskSpec]:
    """Load and validate every task; ``scene_override`` swaps the scene of all tasks."""
    path = Path(path)
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"{path}: cannot read dataset: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(records, list):
        raise DatasetError(f"{path}: expected a JSON list of task records")
    scenes: dict[Path, Scene] = {}

    def scene_at(p: Path) -> Scene:
        p = p.resolve()
        if p not in scenes:
            scenes[p] = load_scene(p)
        return scenes[p]

    tasks = []
    for i, rec in enumerate(records):
        if not isinstance(rec, dict) or set(rec) != _RECORD_KEYS:
            raise DatasetError(f"{path}: record {i} must have exactly the keys {sorted(_RECORD_KEYS)}")
        scene_path = Path(scene_override) if scene_override else path.parent / rec["scene"]
        plan_src = rec["demo_plan"]
        if isinstance(plan_src, list):
            plan_src = "\n".join(plan_src)
        tasks.append(make_task(rec["instruction"], scene_at(scene_path), parse_program(plan_src)))
    return tasks
