"""Strict JSON scene documents.

Schema (all keys except ``objects`` optional, nothing else allowed)::

    {
      "name": "env-0",
      "hand_capacity": 2,
      "objects":   [{"id": "salmon.1", "class": "salmon", "properties": ["grabbable", "food"]}],
      "fluents":   [["closed", "fridge.1"], ["sitting", "sofa.1"]],
      "relations": [["on", "salmon.1", "kitchentable.1"], ["close_to", "agent", "fridge.1"]],
      "rules": [
        {"when": [["in", "?x", "microwave"], ["switched_on", "microwave"]],
         "require": {"?x": ["food"]},
         "add": [["heated", "?x"]]}
      ]
    }

Object ids are ``<class>.<n>``. In rules a term is a ``?variable``, ``agent``,
an object id, or a class name (any instance of that class).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Any

from .world import (
    AGENT,
    DEFAULT_HAND_CAPACITY,
    FLUENT_PREDICATES,
    PROPERTIES,
    RELATION_KINDS,
    InvariantViolation,
    ObjectInstance,
    Rule,
    WorldError,
    WorldState,
    check_invariants,
    id_sort_key,
    is_object_id,
    is_variable,
    run_semantic_rules,
)

CLASS_RE = re.compile(r"^[a-z][a-z0-9_]*$")
ID_RE = re.compile(r"^([a-z][a-z0-9_]*)\.([1-9][0-9]*)$")

_TOP_KEYS = {"name", "hand_capacity", "objects", "fluents", "relations", "rules"}
_OBJECT_KEYS = {"id", "class", "properties"}
_RULE_KEYS = {"when", "add", "require"}


class SceneError(WorldError):
    """Malformed scene document."""


@dataclass(frozen=True)
class Scene:
    name: str
    state: WorldState
    rules: tuple[Rule, ...]
    path: str | None = None


def load_scene(path: str | PathLike) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"{path}: cannot read scene: {exc.strerror}") from exc
    return parse_scene(text, source=str(path))


def parse_scene(text: str, source: str = "<scene>") -> Scene:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return scene_from_dict(doc, source=source)


def _fail(source: str, msg: str) -> SceneError:
    return SceneError(f"{source}: {msg}")


def _strict_keys(obj: Any, allowed: set[str], where: str, source: str) -> None:
    if not isinstance(obj, dict):
        raise _fail(source, f"{where} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise _fail(source, f"{where}: unknown keys {sorted(extra)}")


def _str_list(value: Any, where: str, source: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise _fail(source, f"{where} must be a list of strings")
    return value


def scene_from_dict(doc: Any, source: str = "<scene>") -> Scene:
    _strict_keys(doc, _TOP_KEYS, "scene", source)
    if "objects" not in doc:
        raise _fail(source, "missing 'objects'")
    name = doc.get("name", Path(source).stem)
    capacity = doc.get("hand_capacity", DEFAULT_HAND_CAPACITY)
    if not isinstance(capacity, int) or capacity < 0:
        raise _fail(source, "hand_capacity must be a non-negative integer")

    objects: dict[str, ObjectInstance] = {}
    if not isinstance(doc["objects"], list):
        raise _fail(source, "'objects' must be a list")
    for i, entry in enumerate(doc["objects"]):
        where = f"objects[{i}]"
        _strict_keys(entry, _OBJECT_KEYS, where, source)
        oid, cls = entry.get("id"), entry.get("class")
        if not isinstance(oid, str) or not isinstance(cls, str):
            raise _fail(source, f"{where}: 'id' and 'class' are required strings")
        m = ID_RE.match(oid)
        if not CLASS_RE.match(cls):
            raise InvariantViolation(oid, f"bad class name {cls!r}")
        if not m or m.group(1) != cls:
            raise InvariantViolation(oid, f"id must look like '{cls}.<n>'")
        if oid in objects:
            raise InvariantViolation(oid, "duplicate id")
        props = _str_list(entry.get("properties", []), f"{where}.properties", source)
        unknown = set(props) - PROPERTIES
        if unknown:
            raise InvariantViolation(oid, f"unknown properties {sorted(unknown)}")
        objects[oid] = ObjectInstance(oid, cls, frozenset(props))

    fluents = set()
    for i, f in enumerate(doc.get("fluents", [])):
        f = _str_list(f, f"fluents[{i}]", source)
        if len(f) != 2 or f[0] not in FLUENT_PREDICATES:
            raise _fail(source, f"fluents[{i}]: expected [predicate, id], got {f}")
        fluents.add(tuple(f))

    relations = set()
    for i, r in enumerate(doc.get("relations", [])):
        r = _str_list(r, f"relations[{i}]", source)
        if len(r) != 3 or r[0] not in RELATION_KINDS:
            raise _fail(source, f"relations[{i}]: expected [kind, subject, id], got {r}")
        relations.add(tuple(r))

    classes = {o.class_name for o in objects.values()}
    rules = tuple(
        _parse_rule(raw, f"rules[{i}]", objects, classes, source)
        for i, raw in enumerate(doc.get("rules", []))
    )

    state = WorldState(objects, frozenset(fluents), frozenset(relations), rules, capacity)
    check_invariants(state)
    state = run_semantic_rules(state)
    return Scene(name=name, state=state, rules=rules, path=None if source.startswith("<") else source)


def _check_term(term: str, where: str, objects, classes, source: str) -> None:
    if is_variable(term) or term == AGENT:
        return
    if is_object_id(term):
        if term not in objects:
            raise InvariantViolation(term, f"{where} references a missing object")
        return
    if not CLASS_RE.match(term):
        raise _fail(source, f"{where}: bad term {term!r}")
    # a class absent from this scene simply never matches


def _parse_rule(raw, where, objects, classes, source) -> Rule:
    _strict_keys(raw, _RULE_KEYS, where, source)
    when = []
    bound: set[str] = set()
    for j, conj in enumerate(raw.get("when", [])):
        conj = _str_list(conj, f"{where}.when[{j}]", source)
        pred = conj[0] if conj else ""
        if pred in FLUENT_PREDICATES and len(conj) == 2:
            pass
        elif pred in RELATION_KINDS and len(conj) == 3:
            pass
        else:
            raise _fail(source, f"{where}.when[{j}]: unknown predicate or arity {conj}")
        for term in conj[1:]:
            _check_term(term, f"{where}.when[{j}]", objects, classes, source)
            if not is_object_id(term) and term != AGENT:
                bound.add(term)
        when.append(tuple(conj))
    if not when:
        raise _fail(source, f"{where}: 'when' must be non-empty")
    add = []
    for j, fact in enumerate(raw.get("add", [])):
        fact = _str_list(fact, f"{where}.add[{j}]", source)
        if len(fact) != 2 or fact[0] not in FLUENT_PREDICATES - {"sitting"}:
            raise _fail(source, f"{where}.add[{j}]: expected [fluent, term], got {fact}")
        if not is_object_id(fact[1]) and fact[1] not in bound:
            raise _fail(source, f"{where}.add[{j}]: term {fact[1]!r} is not bound by 'when'")
        _check_term(fact[1], f"{where}.add[{j}]", objects, classes, source)
        add.append(tuple(fact))
    require_raw = raw.get("require", {})
    if not isinstance(require_raw, dict):
        raise _fail(source, f"{where}.require must be an object")
    require = []
    for var, props in sorted(require_raw.items()):
        props = _str_list(props, f"{where}.require[{var}]", source)
        if var not in bound or set(props) - PROPERTIES:
            raise _fail(source, f"{where}.require: bad entry {var!r}: {props}")
        require.append((var, frozenset(props)))
    return Rule(tuple(when), tuple(add), tuple(require))


def scene_to_dict(scene: Scene) -> dict:
    """Inverse of scene_from_dict, with deterministic ordering."""
    state = scene.state
    rules = []
    for rule in scene.rules:
        entry: dict[str, Any] = {"when": [list(c) for c in rule.when], "add": [list(a) for a in rule.add]}
        if rule.require:
            entry["require"] = {var: sorted(props) for var, props in rule.require}
        rules.append(entry)
    return {
        "name": scene.name,
        "hand_capacity": state.hand_capacity,
        "objects": [
            {"id": o.id, "class": o.class_name, "properties": sorted(o.properties)}
            for o in state.objects.values()
        ],
        "fluents": [list(f) for f in sorted(state.fluents, key=_fact_key)],
        "relations": [list(r) for r in sorted(state.relations, key=_fact_key)],
        "rules": rules,
    }


def _fact_key(fact):
    return (fact[0],) + tuple(id_sort_key(a) for a in fact[1:])
