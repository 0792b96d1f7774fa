"""Command-line entry point: ``codeplan {prompt,plan,exec,evaluate,report}``.

Exit codes: 0 success, 1 some episodes failed (generation or runtime errors,
not low scores), 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

from .dataset import DatasetError, TaskSpec, load_dataset
from .interpreter import ASSERTION_MODES, execute, write_trace_jsonl
from .io import atomic_write_text
from .llm import (
    DEFAULT_MAX_TOKENS,
    DEFAULT_TEMPERATURE,
    AssertionOracle,
    Backend,
    CompletionRequest,
    FixtureBackend,
    GatewayError,
    HTTPBackend,
    ProviderConfig,
    ScriptedBackend,
)
from .metrics import exec_fraction, gcr, success
from .planlang import PlanSyntaxError, parse_program, render_program
from .prompts import PLACEMENTS, PromptError, PromptSpec, build_plan_prompt
from .resources import EXAMPLES_PATH, FIXTURES_DIR, SCRIPTED_DIR, TASKS_PATH, load_prompt_examples, scene_path
from .scene import Scene, load_scene
from .suite import MetricsReport, PromptTemplate, render_report_dict, run_suite
from .world import VERBS, WorldError

log = logging.getLogger("codeplan")

EXIT_OK, EXIT_EPISODES_FAILED, EXIT_CONFIG = 0, 1, 2
BACKENDS = ("gold", "scripted", "fixture", "http")
ASSERT_BACKENDS = ("oracle", "plan")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything an evaluation needs; JSON config files use these field names."""

    scene: str = "env0"
    dataset: str = str(TASKS_PATH)
    examples: str = str(EXAMPLES_PATH)
    example_scene: str = "env0"
    num_examples: int = 3
    comments: bool = True
    feedback: bool = True
    placement: str = "global"
    backend: str = "scripted"
    scripted_dir: str = str(SCRIPTED_DIR)
    fixtures_dir: str = str(FIXTURES_DIR)
    record: bool = False
    provider: str | None = None
    assertion_mode: str = "symbolic"
    assert_backend: str = "oracle"
    runs: int = 5
    parallelism: int = 1
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    seed_tag: str = ""
    out: str = "runs/latest"

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        unknown = set(doc) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**doc)

    def override(self, **values: Any) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in values.items() if v is not None})

    def validate(self) -> None:
        """Check enums and every referenced path before any episode starts."""
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.assertion_mode not in ASSERTION_MODES:
            raise ConfigError(f"assertion_mode must be one of {ASSERTION_MODES}")
        if self.assert_backend not in ASSERT_BACKENDS:
            raise ConfigError(f"assert_backend must be one of {ASSERT_BACKENDS}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be one of {PLACEMENTS}")
        if self.runs < 1 or self.parallelism < 1 or self.num_examples < 1:
            raise ConfigError("runs, parallelism and num_examples must be >= 1")
        paths = {"scene": scene_path(self.scene), "example_scene": scene_path(self.example_scene),
                 "dataset": Path(self.dataset), "examples": Path(self.examples)}
        if self.backend == "scripted":
            paths["scripted_dir"] = Path(self.scripted_dir)
        if self.backend == "http" or (self.backend == "fixture" and self.record):
            if not self.provider:
                raise ConfigError(f"backend {self.backend!r} needs a provider config (--provider)")
            paths["provider"] = Path(self.provider)
        if self.backend == "fixture" and not self.record:
            paths["fixtures_dir"] = Path(self.fixtures_dir)
        for key, p in paths.items():
            if not p.exists():
                raise ConfigError(f"{key}: no such file or directory: {p}")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class Loaded:
    scene: Scene
    tasks: list[TaskSpec]
    template: PromptTemplate


def load_run(cfg: RunConfig) -> Loaded:
    cfg.validate()
    try:
        scene = load_scene(scene_path(cfg.scene))
        tasks = load_dataset(cfg.dataset, scene_override=scene_path(cfg.scene))
        example_scene = load_scene(scene_path(cfg.example_scene))
        examples = load_prompt_examples(cfg.examples)[: cfg.num_examples]
    except (WorldError, DatasetError, PlanSyntaxError, OSError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    template = PromptTemplate(
        tuple(examples), tuple(example_scene.state.class_names()), VERBS,
        cfg.comments, cfg.feedback, cfg.placement,
    )
    return Loaded(scene, tasks, template)


def gold_backend(tasks: Sequence[TaskSpec]) -> ScriptedBackend:
    """Replies with each task's ground-truth plan; the upper-bound sanity run."""
    plans = {}
    for t in tasks:
        body = render_program(t.demo_plan).partition("\n")[2]
        plans[t.function_name] = "\n" + body
    return ScriptedBackend(plans)


def make_backend(cfg: RunConfig, tasks: Sequence[TaskSpec]) -> Backend:
    if cfg.backend == "gold":
        return gold_backend(tasks)
    if cfg.backend == "scripted":
        return ScriptedBackend.from_directory(cfg.scripted_dir)
    if cfg.backend == "http":
        return HTTPBackend(_provider(cfg))
    record_from = HTTPBackend(_provider(cfg)) if cfg.record else None
    return FixtureBackend(cfg.fixtures_dir, record_from=record_from)


def _provider(cfg: RunConfig) -> ProviderConfig:
    try:
        return ProviderConfig.load(cfg.provider)
    except (OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"provider config {cfg.provider}: {exc}") from exc


def make_assert_backend(cfg: RunConfig, plan_backend: Backend) -> Backend | None:
    if cfg.assertion_mode != "llm":
        return None
    return AssertionOracle() if cfg.assert_backend == "oracle" else plan_backend


def _find_task(tasks: Sequence[TaskSpec], name: str) -> TaskSpec | None:
    for t in tasks:
        if name in (t.instruction, t.function_name):
            return t
    return None


# -- subcommands -----------------------------------------------------------

def cmd_prompt(cfg: RunConfig, task: str) -> str:
    loaded = load_run(cfg)
    spec = _template_spec(loaded, task)
    return build_plan_prompt(spec).text


def _template_spec(loaded: Loaded, task: str):
    match = _find_task(loaded.tasks, task)
    if match is not None:
        return loaded.template.for_task(match)
    # free-form instruction: same template, current scene's objects
    t = loaded.template
    return PromptSpec(t.actions, tuple(loaded.scene.state.class_names()), t.examples, task,
                      t.include_comments, t.include_feedback, t.object_list_placement, t.example_objects)


def cmd_plan(cfg: RunConfig, task: str, run: int = 0) -> tuple[str, str]:
    """Returns (full program text, finish reason)."""
    loaded = load_run(cfg)
    prompt = build_plan_prompt(_template_spec(loaded, task))
    backend = make_backend(cfg, loaded.tasks)
    seed = prompt.header[4:-3] + f"#{run}"
    if cfg.seed_tag:
        seed = f"{cfg.seed_tag}/{seed}"
    result = backend.complete(CompletionRequest(prompt.text, cfg.max_tokens, cfg.temperature,
                                                prompt.stop_sequences, seed))
    return prompt.header + result.text.rstrip() + "\n", result.finish_reason


def cmd_exec(plan_file: str | Path, cfg: RunConfig, task: str | None = None,
             trace_path: str | Path | None = None) -> tuple[int, str]:
    """Execute one plan file; returns (exit code, summary text)."""
    plan_file = Path(plan_file)
    cfg.validate()
    try:
        source = plan_file.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{plan_file}: {exc.strerror}") from exc
    try:
        program = parse_program(source)
    except PlanSyntaxError as exc:
        raise ConfigError(f"{plan_file}: {exc}") from exc
    try:
        scene = load_scene(scene_path(cfg.scene))
    except (WorldError, OSError) as exc:
        raise ConfigError(str(exc)) from exc
    backend = AssertionOracle() if cfg.assertion_mode == "llm" else None
    if cfg.assertion_mode == "llm" and cfg.assert_backend == "plan":
        backend = make_backend(cfg, [])
    trace = execute(program, scene.state, cfg.assertion_mode, backend, task=program.name)
    trace_path = Path(trace_path) if trace_path else plan_file.with_suffix(".trace.jsonl")
    write_trace_jsonl(trace, trace_path)

    executed = sum(1 for s in trace.steps if s.is_action and s.status == "executed")
    total = sum(1 for s in trace.steps if s.is_action)
    lines = [f"{program.name}: {executed}/{total} actions executed; trace -> {trace_path}"]
    try:
        tasks = load_dataset(cfg.dataset, scene_override=scene_path(cfg.scene))
    except DatasetError as exc:
        raise ConfigError(str(exc)) from exc
    match = _find_task(tasks, task or program.name)
    if task and match is None:
        raise ConfigError(f"task {task!r} not found in {cfg.dataset}")
    if match is not None:
        lines.append(f"SR {success(match.goal, trace.final_state)}  "
                     f"Exec {exec_fraction(trace):.2f}  GCR {gcr(match.goal, trace.final_state):.2f}  "
                     f"({match.instruction})")
    return EXIT_OK, "\n".join(lines)


def cmd_evaluate(cfg: RunConfig) -> tuple[int, MetricsReport]:
    loaded = load_run(cfg)
    backend = make_backend(cfg, loaded.tasks)
    report = run_suite(
        loaded.tasks, cfg.runs, loaded.template, backend,
        assertion_mode=cfg.assertion_mode, assert_backend=make_assert_backend(cfg, backend),
        parallelism=cfg.parallelism, max_tokens=cfg.max_tokens, temperature=cfg.temperature,
        seed_prefix=cfg.seed_tag, config=_report_config(cfg),
    )
    out = Path(cfg.out)
    for ep in report.episodes:
        if ep.trace is not None:
            write_trace_jsonl(ep.trace, out / ep.trace_file)
    atomic_write_text(out / "report.json", report.to_json())
    atomic_write_text(out / "report.txt", report.render_table())
    return (EXIT_EPISODES_FAILED if report.failed_episodes else EXIT_OK), report


def _report_config(cfg: RunConfig) -> dict[str, Any]:
    """Config echoed into the report; paths reduced to names so reports compare across machines.

    The output directory is left out: where a report lands is not part of the experiment.
    """
    doc = cfg.to_dict()
    del doc["out"]
    for key in ("scene", "example_scene", "dataset", "examples", "scripted_dir", "fixtures_dir", "provider"):
        if doc[key] is not None:
            doc[key] = Path(doc[key]).name
    return doc


def cmd_report(report_json: str | Path) -> str:
    try:
        doc = json.loads(Path(report_json).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{report_json}: {exc}") from exc
    return render_report_dict(doc)


# -- argparse --------------------------------------------------------------

def _bool_pair(parser: argparse.ArgumentParser, name: str, help_text: str) -> None:
    parser.add_argument(f"--{name}", dest=name, action="store_true", default=None, help=help_text)
    parser.add_argument(f"--no-{name}", dest=name, action="store_false", help=f"disable: {help_text}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run config; flags override its values")
    parser.add_argument("--scene", help="bundled scene name (env0, env1, env2) or scene JSON path")
    parser.add_argument("--dataset", help="task dataset JSON")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def _prompt_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--examples", help="prompt example programs JSON")
    parser.add_argument("--example-scene", dest="example_scene", help="scene whose objects the examples use")
    parser.add_argument("--num-examples", dest="num_examples", type=int)
    _bool_pair(parser, "comments", "keep comments in example programs")
    _bool_pair(parser, "feedback", "keep assert/else feedback in example programs")
    parser.add_argument("--placement", choices=PLACEMENTS, help="where the object list goes")


def _backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=BACKENDS)
    parser.add_argument("--scripted-dir", dest="scripted_dir")
    parser.add_argument("--fixtures-dir", dest="fixtures_dir")
    parser.add_argument("--provider", help="HTTP provider config JSON (token read from its token_env)")
    parser.add_argument("--record", action="store_true", default=None,
                        help="with --backend fixture: call the provider on a miss and store the result")
    parser.add_argument("--max-tokens", dest="max_tokens", type=int)
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--seed-tag", dest="seed_tag", help="prefix for request seed tags")


def _mode_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", dest="assertion_mode", choices=ASSERTION_MODES)
    parser.add_argument("--assert-backend", dest="assert_backend", choices=ASSERT_BACKENDS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codeplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prompt", help="print the planning prompt for a task")
    _common(p)
    _prompt_flags(p)
    p.add_argument("--task", required=True, help="instruction, dataset task or function name")

    p = sub.add_parser("plan", help="generate a plan program through a backend")
    _common(p)
    _prompt_flags(p)
    _backend_flags(p)
    p.add_argument("--task", required=True)
    p.add_argument("--run", type=int, default=0, help="run index (selects the scripted variant)")
    p.add_argument("--out", help="write the program here instead of stdout")

    p = sub.add_parser("exec", help="execute a plan file against a scene")
    _common(p)
    _mode_flags(p)
    p.add_argument("plan_file")
    p.add_argument("--task", help="dataset task to score against (default: match the function name)")
    p.add_argument("--trace", help="trace JSONL path (default: next to the plan file)")

    p = sub.add_parser("evaluate", help="run the suite and write report.json, report.txt, traces/")
    _common(p)
    _prompt_flags(p)
    _backend_flags(p)
    _mode_flags(p)
    p.add_argument("--runs", type=int)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--out", help="output directory")

    p = sub.add_parser("report", help="re-render the table of a report.json")
    p.add_argument("report_json")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    values = {k: v for k, v in vars(args).items() if k in _CONFIG_FIELDS}
    if args.command == "plan":
        values.pop("out", None)
    return cfg.override(**values)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.command == "report":
            sys.stdout.write(cmd_report(args.report_json))
            return EXIT_OK
        cfg = config_from_args(args)
        if args.command == "prompt":
            sys.stdout.write(cmd_prompt(cfg, args.task) + "\n")
            return EXIT_OK
        if args.command == "plan":
            try:
                text, finish = cmd_plan(cfg, args.task, args.run)
            except GatewayError as exc:
                print(f"error: generation failed: {exc}", file=sys.stderr)
                return EXIT_EPISODES_FAILED
            if finish == "length":
                log.warning("completion hit max_tokens; plan is truncated")
            if args.out:
                atomic_write_text(args.out, text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "exec":
            code, summary = cmd_exec(args.plan_file, cfg, args.task, args.trace)
            print(summary)
            return code
        if args.command == "evaluate":
            code, report = cmd_evaluate(cfg)
            sys.stdout.write(report.render_table())
            print(f"wrote {Path(cfg.out) / 'report.json'}")
            if report.failed_episodes:
                print(f"{len(report.failed_episodes)} of {len(report.episodes)} episodes failed; "
                      "see the error fields in report.json", file=sys.stderr)
            return code
    except (ConfigError, PromptError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
