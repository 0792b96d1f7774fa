"""Bundled data: scenes, the task dataset, prompt examples, scripted plans, fixtures."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .planlang import PlanProgram, parse_program

DATA_DIR = Path(__file__).resolve().parent / "data"
SCENES_DIR = DATA_DIR / "scenes"
TASKS_PATH = DATA_DIR / "tasks.json"
EXAMPLES_PATH = DATA_DIR / "prompt_examples.json"
SCRIPTED_DIR = DATA_DIR / "scripted"
FIXTURES_DIR = DATA_DIR / "fixtures"
BUILTIN_SCENES = ("env0", "env1", "env2")


def scene_path(name_or_path: str | os.PathLike) -> Path:
    """``env1`` -> the bundled scene file; anything else is taken as a path."""
    if str(name_or_path) in BUILTIN_SCENES:
        return SCENES_DIR / f"{name_or_path}.json"
    return Path(name_or_path)


def load_prompt_examples(path: str | os.PathLike = EXAMPLES_PATH) -> list[tuple[str, PlanProgram]]:
    """Example programs as ``[{"instruction": ..., "program": [lines]}]``."""
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for rec in records:
        src = rec["program"]
        if isinstance(src, list):
            src = "\n".join(src)
        out.append((rec["instruction"], parse_program(src)))
    return out
