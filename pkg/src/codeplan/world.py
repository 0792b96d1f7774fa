"""Deterministic household world model.

A state is an immutable bag of facts over a fixed object table. Fluents are
2-tuples ``(predicate, object_id)`` (``sitting`` included, its argument being
the seat), relations are 3-tuples ``(kind, subject, object_id)``.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Iterator, Mapping

AGENT = "agent"

VERBS = (
    "grab", "putin", "putback", "walk", "find", "open",
    "close", "switchon", "switchoff", "sit", "standup",
)
ARITY = {verb: 1 for verb in VERBS} | {"putin": 2, "putback": 2, "standup": 0}

PROPERTIES = frozenset(
    {"grabbable", "openable", "switchable", "sittable", "surface", "container", "food"}
)
FLUENT_PREDICATES = frozenset({"closed", "switched_on", "heated", "washed", "sitting"})
RELATION_KINDS = frozenset({"in", "on", "close_to", "holds"})

# fluent -> property the object must carry
FLUENT_REQUIRES = {
    "closed": "openable",
    "switched_on": "switchable",
    "heated": "food",
    "washed": "grabbable",
    "sitting": "sittable",
}

DEFAULT_HAND_CAPACITY = 2

Fact = tuple  # (pred, obj) or (kind, subject, obj)


class WorldError(Exception):
    pass


class UnknownObject(WorldError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown-object: {self.name!r}"


class InadmissibleAction(WorldError):
    def __init__(self, action: "Action", reason: str):
        super().__init__(f"{action} is not admissible: {reason}")
        self.action = action
        self.reason = reason


class InvariantViolation(WorldError):
    """A state breaks one of the structural invariants; names the object."""

    def __init__(self, obj: str, message: str):
        super().__init__(f"{obj}: {message}")
        self.obj = obj


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    class_name: str
    properties: frozenset[str] = frozenset()

    def has(self, prop: str) -> bool:
        return prop in self.properties


@dataclass(frozen=True)
class Action:
    verb: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.verb}({', '.join(self.args)})"


@dataclass(frozen=True)
class Rule:
    """Add-only implication over facts.

    Terms in ``when`` are variables (``?x``), ``agent``, object ids (contain a
    dot) or class names. A class name behaves like a variable restricted to
    instances of that class, bound consistently within one rule firing.
    """

    when: tuple[tuple[str, ...], ...]
    add: tuple[tuple[str, str], ...]
    require: tuple[tuple[str, frozenset[str]], ...] = ()


def is_variable(term: str) -> bool:
    return term.startswith("?")


def is_object_id(term: str) -> bool:
    return "." in term


@dataclass(frozen=True)
class WorldState:
    objects: Mapping[str, ObjectInstance]
    fluents: frozenset[Fact] = frozenset()
    relations: frozenset[Fact] = frozenset()
    rules: tuple[Rule, ...] = field(default=(), compare=False, repr=False)
    hand_capacity: int = field(default=DEFAULT_HAND_CAPACITY, compare=False)

    @property
    def facts(self) -> frozenset[Fact]:
        return self.fluents | self.relations

    def has(self, *fact: str) -> bool:
        if len(fact) == 2:
            return fact in self.fluents
        return fact in self.relations

    @cached_property
    def parent(self) -> dict[str, tuple[str, str]]:
        """object id -> (kind, parent id) for its in/on placement."""
        return {r[1]: (r[0], r[2]) for r in self.relations if r[0] in ("in", "on")}

    @cached_property
    def children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for child, (_, par) in self.parent.items():
            out.setdefault(par, []).append(child)
        return out

    @cached_property
    def held(self) -> frozenset[str]:
        return frozenset(r[2] for r in self.relations if r[0] == "holds")

    @cached_property
    def close(self) -> frozenset[str]:
        return frozenset(r[2] for r in self.relations if r[0] == "close_to")

    @cached_property
    def sitting_on(self) -> str | None:
        for f in self.fluents:
            if f[0] == "sitting":
                return f[1]
        return None

    @cached_property
    def _by_class(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for oid in sorted(self.objects, key=id_sort_key):
            out.setdefault(self.objects[oid].class_name, []).append(oid)
        return out

    def instances(self, class_name: str) -> list[str]:
        """Ids of a class, lowest id first."""
        return list(self._by_class.get(class_name, ()))

    def class_names(self) -> list[str]:
        """Distinct class names in object-table order."""
        seen: dict[str, None] = {}
        for obj in self.objects.values():
            seen.setdefault(obj.class_name, None)
        return list(seen)

    def evolve(self, fluents: Iterable[Fact] | None = None,
               relations: Iterable[Fact] | None = None) -> "WorldState":
        return replace(
            self,
            fluents=self.fluents if fluents is None else frozenset(fluents),
            relations=self.relations if relations is None else frozenset(relations),
        )

    def digest(self) -> str:
        blob = "\n".join(sorted(format_fact(f) for f in self.facts))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def id_sort_key(oid: str) -> tuple:
    head, _, tail = oid.rpartition(".")
    if head and tail.isdigit():
        return (head, int(tail), "")
    return (oid, -1, oid)


def format_fact(fact: Fact) -> str:
    return f"{fact[0]}({', '.join(fact[1:])})"


# -- queries ---------------------------------------------------------------

def reachable(state: WorldState, obj: str) -> bool:
    """False iff ``obj`` sits, transitively, inside a closed container."""
    if obj not in state.objects:
        raise UnknownObject(obj)
    seen = {obj}
    cur = obj
    while cur in state.parent:
        kind, par = state.parent[cur]
        if kind == "in" and ("closed", par) in state.fluents:
            return False
        if par in seen:
            break
        seen.add(par)
        cur = par
    return True


def ancestors(state: WorldState, obj: str) -> list[str]:
    out = []
    cur = obj
    while cur in state.parent and state.parent[cur][1] not in out:
        cur = state.parent[cur][1]
        out.append(cur)
    return out


def resolve_object(name: str, state: WorldState) -> str | None:
    """Map a plan-level object name to an id, or None if nothing matches.

    Among class duplicates prefer a held instance, then one the agent is
    close to, then the lowest id. An exact id is accepted as-is.
    """
    name = name.strip().lower()
    if name in state.objects:
        return name
    candidates = state.instances(name)
    if not candidates:
        return None
    for pool in (state.held, state.close):
        for oid in candidates:
            if oid in pool:
                return oid
    return candidates[0]


# -- admissibility ---------------------------------------------------------

def _need_close(state: WorldState, o: str) -> str | None:
    return None if o in state.close else "not-close"


def _pre_walk(state, o):
    return None


def _pre_find(state, o):
    return None if reachable(state, o) else "not-reachable"


def _pre_grab(state, o):
    obj = state.objects[o]
    if o in state.held:
        return "already-holding"
    if not obj.has("grabbable"):
        return "not-grabbable"
    if (reason := _need_close(state, o)):
        return reason
    if not reachable(state, o):
        return "not-reachable"
    if len(state.held) >= state.hand_capacity:
        return "hands-full"
    return None


def _pre_putin(state, o, c):
    if o not in state.held:
        return "not-holding"
    if o == c or o in ancestors(state, c):
        return "cycle"
    if (reason := _need_close(state, c)):
        return reason
    target = state.objects[c]
    if not target.has("container"):
        return "not-container"
    if target.has("openable") and ("closed", c) in state.fluents:
        return "container-closed"
    return None


def _pre_putback(state, o, s):
    if o not in state.held:
        return "not-holding"
    if o == s or o in ancestors(state, s):
        return "cycle"
    if (reason := _need_close(state, s)):
        return reason
    if not state.objects[s].has("surface"):
        return "not-surface"
    return None


def _pre_open(state, o):
    if (reason := _need_close(state, o)):
        return reason
    if not state.objects[o].has("openable"):
        return "not-openable"
    if ("closed", o) not in state.fluents:
        return "already-open"
    return None


def _pre_close(state, o):
    if (reason := _need_close(state, o)):
        return reason
    if not state.objects[o].has("openable"):
        return "not-openable"
    if ("closed", o) in state.fluents:
        return "already-closed"
    return None


def _pre_switchon(state, o):
    if (reason := _need_close(state, o)):
        return reason
    obj = state.objects[o]
    if not obj.has("switchable"):
        return "not-switchable"
    if ("switched_on", o) in state.fluents:
        return "already-on"
    if obj.has("openable") and ("closed", o) not in state.fluents:
        return "must-be-closed"
    return None


def _pre_switchoff(state, o):
    if (reason := _need_close(state, o)):
        return reason
    if not state.objects[o].has("switchable"):
        return "not-switchable"
    if ("switched_on", o) not in state.fluents:
        return "already-off"
    return None


def _pre_sit(state, o):
    if (reason := _need_close(state, o)):
        return reason
    if not state.objects[o].has("sittable"):
        return "not-sittable"
    return None


_PRECONDITIONS = {
    "walk": _pre_walk,
    "find": _pre_find,
    "grab": _pre_grab,
    "putin": _pre_putin,
    "putback": _pre_putback,
    "open": _pre_open,
    "close": _pre_close,
    "switchon": _pre_switchon,
    "switchoff": _pre_switchoff,
    "sit": _pre_sit,
}


def is_admissible(state: WorldState, action: Action) -> tuple[bool, str | None]:
    """Check ``action`` against ``state``; returns ``(ok, failure_reason)``."""
    verb = action.verb
    if verb not in ARITY:
        return False, "unknown-action"
    if len(action.args) != ARITY[verb]:
        return False, "bad-arity"
    for arg in action.args:
        if arg not in state.objects:
            return False, "unknown-object"
    sitting = state.sitting_on is not None
    if verb == "standup":
        return (True, None) if sitting else (False, "precondition-sitting")
    if sitting:
        return False, "agent-sitting"
    reason = _PRECONDITIONS[verb](state, *action.args)
    return reason is None, reason


# -- transition model ------------------------------------------------------

def _approach(state: WorldState, o: str) -> WorldState:
    near = {o} | set(state.children.get(o, ())) | set(state.held)
    relations = {r for r in state.relations if r[0] != "close_to"}
    relations |= {("close_to", AGENT, x) for x in near}
    return state.evolve(relations=relations)


def _place(state: WorldState, o: str, kind: str, target: str) -> WorldState:
    relations = {r for r in state.relations if r != ("holds", AGENT, o)}
    relations.add((kind, o, target))
    return state.evolve(relations=relations)


def _effects(state: WorldState, action: Action) -> WorldState:
    verb, args = action.verb, action.args
    if verb in ("walk", "find"):
        return _approach(state, args[0])
    if verb == "grab":
        o = args[0]
        relations = {r for r in state.relations if not (r[0] in ("in", "on") and r[1] == o)}
        relations.add(("holds", AGENT, o))
        return state.evolve(relations=relations)
    if verb == "putin":
        return _place(state, args[0], "in", args[1])
    if verb == "putback":
        return _place(state, args[0], "on", args[1])
    if verb == "open":
        return state.evolve(fluents=state.fluents - {("closed", args[0])})
    if verb == "close":
        return state.evolve(fluents=state.fluents | {("closed", args[0])})
    if verb == "switchon":
        return state.evolve(fluents=state.fluents | {("switched_on", args[0])})
    if verb == "switchoff":
        return state.evolve(fluents=state.fluents - {("switched_on", args[0])})
    if verb == "sit":
        return state.evolve(fluents=state.fluents | {("sitting", args[0])})
    if verb == "standup":
        return state.evolve(fluents={f for f in state.fluents if f[0] != "sitting"})
    raise AssertionError(verb)


def apply(state: WorldState, action: Action) -> WorldState:
    """Successor state under ``action``, with semantic rules run to fixpoint."""
    ok, reason = is_admissible(state, action)
    if not ok:
        raise InadmissibleAction(action, reason)
    return run_semantic_rules(_effects(state, action))


# -- semantic rules --------------------------------------------------------

def _bind(term: str, value: str, binding: dict[str, str], state: WorldState) -> bool:
    if term == AGENT or is_object_id(term):
        return term == value
    if not is_variable(term):
        obj = state.objects.get(value)
        if obj is None or obj.class_name != term:
            return False
    bound = binding.get(term)
    if bound is None:
        binding[term] = value
        return True
    return bound == value


def _matches(rule: Rule, state: WorldState, index: dict[str, list[Fact]]) -> Iterator[dict[str, str]]:
    def walk(i: int, binding: dict[str, str]) -> Iterator[dict[str, str]]:
        if i == len(rule.when):
            yield binding
            return
        conj = rule.when[i]
        for fact in index.get(conj[0], ()):
            if len(fact) != len(conj):
                continue
            trial = dict(binding)
            if all(_bind(t, v, trial, state) for t, v in zip(conj[1:], fact[1:])):
                yield from walk(i + 1, trial)

    for binding in walk(0, {}):
        if all(
            state.objects[binding[var]].properties >= props
            for var, props in rule.require
            if var in binding
        ):
            yield binding


def _eligible(state: WorldState, pred: str, obj: str) -> bool:
    need = FLUENT_REQUIRES.get(pred)
    return need is None or state.objects[obj].has(need)


def run_semantic_rules(state: WorldState) -> WorldState:
    """Apply the state's rules until nothing new is added."""
    if not state.rules:
        return state
    fluents = set(state.fluents)
    while True:
        index: dict[str, list[Fact]] = {}
        for fact in itertools.chain(fluents, state.relations):
            index.setdefault(fact[0], []).append(fact)
        current = state.evolve(fluents=fluents)
        added = set()
        for rule in state.rules:
            for binding in _matches(rule, current, index):
                for pred, term in rule.add:
                    obj = binding.get(term, term)
                    fact = (pred, obj)
                    if obj in state.objects and fact not in fluents and _eligible(state, pred, obj):
                        added.add(fact)
        if not added:
            break
        fluents |= added
    if len(fluents) == len(state.fluents):
        return state
    return state.evolve(fluents=fluents)


# -- invariants ------------------------------------------------------------

def check_invariants(state: WorldState) -> None:
    """Raise InvariantViolation on the first broken structural invariant."""
    objects = state.objects
    for oid, obj in objects.items():
        if oid != obj.id:
            raise InvariantViolation(oid, f"table key does not match id {obj.id!r}")
        if not obj.class_name:
            raise InvariantViolation(oid, "empty class name")
        unknown = obj.properties - PROPERTIES
        if unknown:
            raise InvariantViolation(oid, f"unknown properties {sorted(unknown)}")
    sitting = []
    for fact in state.fluents:
        if len(fact) != 2 or fact[0] not in FLUENT_PREDICATES:
            raise InvariantViolation(str(fact), "malformed fluent")
        pred, oid = fact
        if oid not in objects:
            raise InvariantViolation(oid, f"{pred} references a missing object")
        if not _eligible(state, pred, oid):
            raise InvariantViolation(oid, f"{pred} requires property {FLUENT_REQUIRES[pred]}")
        if pred == "sitting":
            sitting.append(oid)
    if len(sitting) > 1:
        raise InvariantViolation(sitting[1], "agent sits on more than one object")
    placed: dict[str, str] = {}
    held = 0
    for fact in state.relations:
        if len(fact) != 3 or fact[0] not in RELATION_KINDS:
            raise InvariantViolation(str(fact), "malformed relation")
        kind, subj, oid = fact
        if oid not in objects:
            raise InvariantViolation(oid, f"{kind} references a missing object")
        if kind in ("close_to", "holds"):
            if subj != AGENT:
                raise InvariantViolation(subj, f"{kind} must have the agent as subject")
            held += kind == "holds"
            continue
        if subj not in objects:
            raise InvariantViolation(subj, f"{kind} references a missing object")
        if subj == oid:
            raise InvariantViolation(subj, f"{kind} relates an object to itself")
        if subj in placed:
            raise InvariantViolation(subj, f"placed both {placed[subj]} and {kind} another parent")
        placed[subj] = kind
    for oid in state.held:
        if oid in placed:
            raise InvariantViolation(oid, "held object is also placed in/on something")
        if not objects[oid].has("grabbable"):
            raise InvariantViolation(oid, "held object is not grabbable")
    if held > state.hand_capacity:
        raise InvariantViolation(AGENT, f"holds {held} objects, capacity {state.hand_capacity}")
    for oid in placed:
        if oid in ancestors(state, oid):
            raise InvariantViolation(oid, "containment cycle")
