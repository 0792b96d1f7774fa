"""Multi-run experiment runner and the per-task report."""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

from .dataset import TaskSpec
from .interpreter import ExecutionTrace, execute
from .llm import DEFAULT_MAX_TOKENS, DEFAULT_TEMPERATURE, Backend, CompletionRequest
from .metrics import Stat, exec_fraction, gcr, success
from .planlang import PlanProgram, parse_program
from .prompts import PromptSpec, build_plan_prompt
from .world import VERBS

log = logging.getLogger(__name__)

# plan-length buckets used in the per-task table
BUCKETS = ((0, 5), (6, 10), (11, 18), (19, None))
METRICS = ("sr", "exec", "gcr")


@dataclass(frozen=True)
class PromptTemplate:
    """Everything about the prompt except the task and its scene objects."""

    examples: tuple[tuple[str, PlanProgram], ...]
    example_objects: tuple[str, ...]
    actions: tuple[str, ...] = VERBS
    include_comments: bool = True
    include_feedback: bool = True
    object_list_placement: str = "global"

    @classmethod
    def from_tasks(cls, example_tasks: Sequence[TaskSpec], num_examples: int = 3, **flags) -> "PromptTemplate":
        chosen = list(example_tasks)[:num_examples]
        if not chosen:
            raise ValueError("no example tasks available")
        objects = tuple(chosen[0].scene.state.class_names())
        examples = tuple((t.instruction, t.demo_plan) for t in chosen)
        return cls(examples, objects, **flags)

    def for_task(self, task: TaskSpec) -> PromptSpec:
        return PromptSpec(
            actions=self.actions,
            objects=tuple(task.scene.state.class_names()),
            examples=self.examples,
            task=task.instruction,
            include_comments=self.include_comments,
            include_feedback=self.include_feedback,
            object_list_placement=self.object_list_placement,
            example_objects=self.example_objects,
        )


@dataclass
class Episode:
    task: TaskSpec
    run: int
    seed_tag: str
    sr: int
    exec: float
    gcr: float
    finish_reason: str
    completion: str = ""
    error: str | None = None
    trace: ExecutionTrace | None = field(default=None, repr=False)

    @property
    def trace_file(self) -> str:
        return f"traces/{self.task.function_name}__run{self.run}.jsonl"


def run_episode(task: TaskSpec, run: int, template: PromptTemplate, backend: Backend,
                assertion_mode: str = "symbolic", assert_backend: Backend | None = None,
                max_tokens: int = DEFAULT_MAX_TOKENS, temperature: float = DEFAULT_TEMPERATURE,
                seed_prefix: str = "") -> Episode:
    """prompt -> complete -> parse -> execute -> score, never raising."""
    seed_tag = f"{task.function_name}#{run}"
    if seed_prefix:
        seed_tag = f"{seed_prefix}/{seed_tag}"
    initial = task.scene.state
    try:
        prompt = build_plan_prompt(template.for_task(task))
        request = CompletionRequest(prompt.text, max_tokens, temperature, prompt.stop_sequences, seed_tag)
        result = backend.complete(request)
        program = parse_program(prompt.header + result.text)
        trace = execute(program, initial, assertion_mode, assert_backend, task=task.function_name,
                        generation_truncated=result.finish_reason == "length")
    except Exception as exc:  # every episode failure is data, not a crash
        log.warning("episode %s failed: %s: %s", seed_tag, type(exc).__name__, exc)
        return Episode(task, run, seed_tag, 0, 0.0, gcr(task.goal, initial), "error",
                       error=f"{type(exc).__name__}: {exc}")
    return Episode(task, run, seed_tag, success(task.goal, trace.final_state), exec_fraction(trace),
                   gcr(task.goal, trace.final_state), result.finish_reason, result.text, trace=trace)


@dataclass
class TaskMetrics:
    instruction: str
    plan_length: int
    sr: Stat
    exec: Stat
    gcr: Stat


@dataclass
class MetricsReport:
    runs: int
    tasks: list[TaskMetrics]
    buckets: list[tuple[str, dict[str, Stat]]]
    overall: dict[str, Stat]
    episodes: list[Episode] = field(repr=False)
    config: dict[str, Any] = field(default_factory=dict)

    @property
    def failed_episodes(self) -> list[Episode]:
        return [e for e in self.episodes if e.error]

    def to_dict(self) -> dict[str, Any]:
        def stat(s: Stat, values=None) -> dict:
            out = {"mean": _num(s.mean), "std": _num(s.std)}
            if values is not None:
                out["values"] = values
            return out

        by_task: dict[str, list[Episode]] = {}
        for ep in self.episodes:
            by_task.setdefault(ep.task.instruction, []).append(ep)
        return {
            "config": self.config,
            "runs": self.runs,
            "overall": {m: stat(self.overall[m]) for m in METRICS},
            "tasks": [
                {
                    "task": t.instruction,
                    "plan_length": t.plan_length,
                    **{m: stat(getattr(t, m), [getattr(e, m) for e in by_task[t.instruction]])
                       for m in METRICS},
                }
                for t in self.tasks
            ],
            "buckets": [{"bucket": label, **{m: stat(s[m]) for m in METRICS}} for label, s in self.buckets],
            "episodes": [
                {
                    "task": e.task.instruction,
                    "run": e.run,
                    "seed_tag": e.seed_tag,
                    "sr": e.sr,
                    "exec": e.exec,
                    "gcr": e.gcr,
                    "finish_reason": e.finish_reason,
                    "error": e.error,
                    "trace_file": e.trace_file if e.trace is not None else None,
                }
                for e in self.episodes
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def render_table(self) -> str:
        rows = [(t.instruction, t.plan_length, t.sr, t.exec, t.gcr) for t in self.tasks]
        buckets = [(label, s["sr"], s["exec"], s["gcr"]) for label, s in self.buckets]
        o = self.overall
        return format_table(rows, buckets, (o["sr"], o["exec"], o["gcr"]), self.runs)


def format_table(rows, buckets, overall, runs: int) -> str:
    """Per-task rows, bucket averages and the overall line, each as mean±std."""
    width = max([len("Task Desc")] + [len(r[0]) for r in rows]) + 2

    def cells(stats) -> str:
        return "".join(f"{s.fmt():<11}" for s in stats)

    head = f"{'Task Desc':<{width}}{'|A|':>4}  {'SR':<11}{'Exec':<11}{'GCR':<11}".rstrip()
    lines = [head, "-" * len(head)]
    for name, length, *stats in rows:
        lines.append(f"{name:<{width}}{length:>4}  {cells(stats)}".rstrip())
    lines.append("-" * len(head))
    for label, *stats in buckets:
        lines.append(f"{'Avg: ' + label:<{width + 4}}  {cells(stats)}".rstrip())
    lines.append(f"{f'Overall ({runs} runs)':<{width + 4}}  {cells(overall)}".rstrip())
    return "\n".join(lines) + "\n"


def render_report_dict(doc: dict) -> str:
    """Table text from a saved ``report.json``."""
    def stat(d: dict, n: int) -> Stat:
        if d["mean"] is None:
            return Stat(math.nan, math.nan, 0)
        return Stat(d["mean"], d["std"], n)

    runs = doc["runs"]
    rows = [(t["task"], t["plan_length"], *(stat(t[m], len(t[m].get("values", [])) or runs) for m in METRICS))
            for t in doc["tasks"]]
    buckets = [(b["bucket"], *(stat(b[m], 1) for m in METRICS)) for b in doc["buckets"]]
    overall = tuple(stat(doc["overall"][m], runs) for m in METRICS)
    return format_table(rows, buckets, overall, runs)


def _num(x: float):
    return None if math.isnan(x) else x


def bucket_label(lo: int, hi: int | None) -> str:
    return f"{lo}<=|A|<={hi}" if hi is not None else f"{lo}<=|A|"


def aggregate(episodes: Sequence[Episode], runs: int, config: dict | None = None) -> MetricsReport:
    episodes = sorted(episodes, key=lambda e: (e.task.instruction, e.run))
    order: dict[str, TaskSpec] = {}
    for e in episodes:
        order.setdefault(e.task.instruction, e.task)
    by_task = {name: [e for e in episodes if e.task.instruction == name] for name in order}

    tasks = [
        TaskMetrics(name, order[name].plan_length,
                    *(Stat.of([getattr(e, m) for e in eps]) for m in METRICS))
        for name, eps in by_task.items()
    ]
    buckets = []
    for lo, hi in BUCKETS:
        pool = [e for e in episodes if lo <= e.task.plan_length and (hi is None or e.task.plan_length <= hi)]
        if pool:
            buckets.append((bucket_label(lo, hi), {m: Stat.of([getattr(e, m) for e in pool]) for m in METRICS}))
    run_ids = sorted({e.run for e in episodes})
    overall = {
        m: Stat.of([
            math.fsum(getattr(e, m) for e in episodes if e.run == r)
            / sum(1 for e in episodes if e.run == r)
            for r in run_ids
        ])
        for m in METRICS
    }
    return MetricsReport(runs, tasks, buckets, overall, list(episodes), dict(config or {}))


def run_suite(tasks: Sequence[TaskSpec], runs: int, template: PromptTemplate, backend: Backend,
              assertion_mode: str = "symbolic", assert_backend: Backend | None = None,
              parallelism: int = 1, max_tokens: int = DEFAULT_MAX_TOKENS,
              temperature: float = DEFAULT_TEMPERATURE, seed_prefix: str = "",
              config: dict | None = None) -> MetricsReport:
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if assertion_mode == "llm" and assert_backend is None:
        raise ValueError("assertion_mode='llm' needs assert_backend")
    jobs = [(task, run) for task in tasks for run in range(runs)]

    def one(job):
        task, run = job
        return run_episode(task, run, template, backend, assertion_mode, assert_backend,
                           max_tokens, temperature, seed_prefix)

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            episodes = list(pool.map(one, jobs))
    else:
        episodes = [one(job) for job in jobs]
    # keep dataset order for the table
    rank = {t.instruction: i for i, t in enumerate(tasks)}
    report = aggregate(episodes, runs, config)
    report.tasks.sort(key=lambda t: rank[t.instruction])
    report.episodes.sort(key=lambda e: (rank[e.task.instruction], e.run))
    return report
