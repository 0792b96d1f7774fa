"""Completion backends behind one ``complete(request)`` interface.

Mock backends (scripted plans, recorded fixtures, the assertion oracle) are
pure lookups and never touch the network. ``HTTPBackend`` talks to an
OpenAI-style completions endpoint described by a provider config file.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Protocol, Sequence

import httpx

from .planlang import HANDS, STATE_WORDS, AssertBlock, parse_statement
from .prompts import PromptText

log = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.7
DEFAULT_MAX_TOKENS = 512
FINISH_REASONS = ("stop", "length", "error")


class GatewayError(Exception):
    """Base for every backend failure; a batch run marks the episode failed."""


class FixtureMiss(GatewayError):
    def __init__(self, seed_tag: str, key: str = ""):
        super().__init__(f"no recorded completion for seed_tag {seed_tag!r} (key {key[:12] or '-'})")
        self.seed_tag = seed_tag


class TransportError(GatewayError):
    pass


class GatewayTimeout(GatewayError):
    pass


class AuthError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = DEFAULT_MAX_TOKENS
    temperature: float = DEFAULT_TEMPERATURE
    stop: tuple[str, ...] = ()
    seed_tag: str = ""

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    def key(self) -> str:
        """Hash of every field, so a changed prompt never reuses a stale fixture."""
        blob = json.dumps(
            [self.seed_tag, self.prompt, self.max_tokens, self.temperature, list(self.stop)],
            ensure_ascii=False,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionResult:
    text: str
    finish_reason: str
    backend_id: str


class Backend(Protocol):
    backend_id: str

    def complete(self, request: CompletionRequest) -> CompletionResult: ...


def apply_stops(text: str, stop: Sequence[str]) -> tuple[str, bool]:
    """Cut ``text`` at the earliest stop sequence (excluded)."""
    cut = min((i for s in stop if s and (i := text.find(s)) >= 0), default=-1)
    if cut < 0:
        return text, False
    return text[:cut], True


def _finish(text: str, request: CompletionRequest, backend_id: str) -> CompletionResult:
    text, _ = apply_stops(text, request.stop)
    limit = request.max_tokens * 4
    if len(text) > limit:
        return CompletionResult(text[:limit], "length", backend_id)
    return CompletionResult(text, "stop", backend_id)


def split_seed_tag(seed_tag: str) -> tuple[str, int]:
    """``"env0/wash_mug#3"`` -> ``("wash_mug", 3)``; any ``prefix/`` is dropped."""
    tail = seed_tag.rpartition("/")[2]
    task, _, run = tail.rpartition("#")
    if task and run.isdigit():
        return task, int(run)
    return tail, 0


class ScriptedBackend:
    """Canned completions per task, cycling through variants by run index."""

    backend_id = "scripted"

    def __init__(self, plans: Mapping[str, Sequence[str] | str]):
        self.plans = {k: [v] if isinstance(v, str) else list(v) for k, v in plans.items()}

    @classmethod
    def from_directory(cls, path: str | os.PathLike) -> "ScriptedBackend":
        """One sub-directory per task function name, one plan file per variant.

        Files hold full plan text; the ``def`` line is dropped because the
        prompt already ends with it.
        """
        plans: dict[str, list[str]] = {}
        root = Path(path)
        if not root.is_dir():
            raise FileNotFoundError(f"scripted plan directory not found: {root}")
        for task_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            variants = []
            for f in sorted(task_dir.iterdir()):
                if f.is_file():
                    text = f.read_text(encoding="utf-8")
                    first, _, rest = text.partition("\n")
                    variants.append("\n" + rest if first.lstrip().startswith("def ") else text)
            if variants:
                plans[task_dir.name] = variants
        return cls(plans)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        if request.seed_tag in self.plans:
            variants = self.plans[request.seed_tag]
            run = 0
        else:
            task, run = split_seed_tag(request.seed_tag)
            variants = self.plans.get(task)
            if not variants:
                raise FixtureMiss(request.seed_tag)
        return _finish(variants[run % len(variants)], request, self.backend_id)


class FixtureBackend:
    """Replays completions stored as ``<request-hash>.json`` files.

    With ``record_from`` set, misses are forwarded to that backend and the
    result is written to the store.
    """

    backend_id = "fixture"

    def __init__(self, directory: str | os.PathLike, record_from: Backend | None = None):
        self.directory = Path(directory)
        self.record_from = record_from
        self._lock = threading.Lock()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def complete(self, request: CompletionRequest) -> CompletionResult:
        key = request.key()
        path = self._path(key)
        if path.exists():
            doc = json.loads(path.read_text(encoding="utf-8"))
            return CompletionResult(doc["text"], doc["finish_reason"], self.backend_id)
        if self.record_from is None:
            raise FixtureMiss(request.seed_tag, key)
        result = self.record_from.complete(request)
        doc = {
            "seed_tag": request.seed_tag,
            "request_sha256": key,
            "finish_reason": result.finish_reason,
            "text": result.text,
        }
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
            os.replace(tmp, path)
        return CompletionResult(result.text, result.finish_reason, self.backend_id)


class CallableBackend:
    """Wraps ``responder(request) -> text``; handy in tests."""

    def __init__(self, responder: Callable[[CompletionRequest], str], backend_id: str = "callable"):
        self.responder = responder
        self.backend_id = backend_id

    def complete(self, request: CompletionRequest) -> CompletionResult:
        return _finish(self.responder(request), request, self.backend_id)


_FACT_LINE = re.compile(r"^([a-z_]+)\((.*)\)$")


class AssertionOracle:
    """Answers state-feedback prompts truthfully from the excerpt they carry.

    Reads only the prompt text, so agreement with the symbolic checker shows
    the excerpt holds everything needed to decide the assertion.
    """

    backend_id = "assertion-oracle"

    def complete(self, request: CompletionRequest) -> CompletionResult:
        facts: set[tuple[str, tuple[str, ...]]] = set()
        condition = None
        for line in request.prompt.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("assert"):
                st = parse_statement(line)
                if isinstance(st, AssertBlock):
                    condition = st.condition
                continue
            m = _FACT_LINE.match(line)
            if m:
                facts.add((m.group(1), tuple(a.strip() for a in m.group(2).split(","))))
        if condition is None:
            return CompletionResult("unknown", "stop", self.backend_id)
        return CompletionResult(str(self._decide(condition, facts)), "stop", self.backend_id)

    @staticmethod
    def _decide(cond, facts) -> bool:
        if cond.kind == "close_to":
            value = ("close_to", ("agent", cond.obj)) in facts
        elif cond.kind == "is":
            if cond.arg not in STATE_WORDS:
                return False
            pred, truth = STATE_WORDS[cond.arg]
            value = ((pred, (cond.obj,)) in facts) == truth
        elif cond.kind == "in" and cond.arg == HANDS:
            value = ("holds", ("agent", cond.obj)) in facts
        else:
            value = (cond.kind, (cond.obj, cond.arg)) in facts
        return value != cond.negated


_ANSWER = re.compile(r"^\W*(true|false)\b", re.I)


def parse_truth(text: str) -> bool | None:
    m = _ANSWER.match(text)
    if not m:
        return None
    return m.group(1).lower() == "true"


def answer_assertion(backend: Backend, prompt: PromptText, seed_tag: str = "assert") -> bool:
    """Ask ``backend`` whether an assertion holds; unclear answers count as False."""
    request = CompletionRequest(
        prompt.text, max_tokens=4, temperature=0.0, stop=prompt.stop_sequences, seed_tag=seed_tag
    )
    result = backend.complete(request)
    verdict = parse_truth(result.text)
    if verdict is None:
        log.warning("unparseable assertion answer %r for %s; treating as False", result.text, prompt.header)
        return False
    return verdict


# -- HTTP ------------------------------------------------------------------

@dataclass(frozen=True)
class ProviderConfig:
    url: str
    model: str
    token_env: str | None = "OPENAI_API_KEY"
    request_fields: Mapping[str, str] = field(default_factory=lambda: {
        "model": "model", "prompt": "prompt", "max_tokens": "max_tokens",
        "temperature": "temperature", "stop": "stop",
    })
    text_path: tuple[Any, ...] = ("choices", 0, "text")
    finish_path: tuple[Any, ...] = ("choices", 0, "finish_reason")
    extra_body: Mapping[str, Any] = field(default_factory=dict)
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_s: float = 1.0
    max_in_flight: int = 4

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ProviderConfig":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{path}: unknown provider keys {sorted(unknown)}")
        for key in ("text_path", "finish_path"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


def _dig(doc: Any, path: Sequence[Any]) -> Any:
    for step in path:
        doc = doc[step]
    return doc


class HTTPBackend:
    """One POST per request, bounded retries, bounded concurrency."""

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.backend_id = f"http:{config.model}"
        self._client = client or httpx.Client(timeout=config.timeout_s)
        self._slots = threading.BoundedSemaphore(max(1, config.max_in_flight))
        self._sleep = sleep

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.token_env:
            token = os.environ.get(self.config.token_env)
            if not token:
                raise AuthError(f"environment variable {self.config.token_env} is not set")
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _body(self, request: CompletionRequest) -> dict[str, Any]:
        values = {
            "model": self.config.model,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "stop": list(request.stop) or None,
        }
        body = dict(self.config.extra_body)
        for ours, theirs in self.config.request_fields.items():
            if values.get(ours) is not None:
                body[theirs] = values[ours]
        return body

    def complete(self, request: CompletionRequest) -> CompletionResult:
        headers = self._headers()
        body = self._body(request)
        last: GatewayError | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(self.config.backoff_s * 2 ** (attempt - 1))
            with self._slots:
                try:
                    resp = self._client.post(self.config.url, json=body, headers=headers,
                                             timeout=self.config.timeout_s)
                except httpx.TimeoutException as exc:
                    last = GatewayTimeout(f"{self.config.url}: {exc}")
                    continue
                except httpx.HTTPError as exc:
                    last = TransportError(f"{self.config.url}: {exc}")
                    continue
            if resp.status_code in (401, 403):
                raise AuthError(f"{self.config.url}: HTTP {resp.status_code}")
            if resp.status_code == 429:
                last = RateLimited(f"{self.config.url}: HTTP 429")
                continue
            if resp.status_code >= 500:
                last = TransportError(f"{self.config.url}: HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise TransportError(f"{self.config.url}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                doc = resp.json()
                text = _dig(doc, self.config.text_path)
                finish = _dig(doc, self.config.finish_path)
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise TransportError(f"{self.config.url}: unexpected response shape: {exc}") from exc
            text, hit = apply_stops(str(text), request.stop)
            reason = "length" if finish == "length" and not hit else "stop"
            return CompletionResult(text, reason, self.backend_id)
        assert last is not None
        raise last
