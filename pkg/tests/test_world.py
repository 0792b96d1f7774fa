import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codeplan.scene import SceneError, load_scene, parse_scene, scene_to_dict
from codeplan.resources import scene_path
from codeplan.world import (
    AGENT,
    ARITY,
    VERBS,
    Action,
    InadmissibleAction,
    InvariantViolation,
    ObjectInstance,
    Rule,
    WorldError,
    WorldState,
    apply,
    check_invariants,
    is_admissible,
    reachable,
    resolve_object,
    run_semantic_rules,
)

from conftest import random_action, reachable_states

ENV0 = load_scene(scene_path("env0"))
S0 = ENV0.state


def do(state, *steps):
    for verb, *args in steps:
        state = apply(state, Action(verb, tuple(args)))
    return state


def near(state, oid):
    return do(state, ("walk", oid))


# -- examples --------------------------------------------------------------

def test_grab_requires_proximity():
    assert is_admissible(S0, Action("grab", ("salmon.1",))) == (False, "not-close")
    s = do(S0, ("find", "salmon.1"), ("grab", "salmon.1"))
    assert ("holds", AGENT, "salmon.1") in s.relations
    assert ("on", "salmon.1", "kitchentable.1") not in s.relations


def test_put_in_closed_container_is_rejected():
    s = do(S0, ("find", "salmon.1"), ("grab", "salmon.1"), ("find", "fridge.1"))
    assert is_admissible(s, Action("putin", ("salmon.1", "fridge.1"))) == (False, "container-closed")
    s = do(s, ("open", "fridge.1"), ("putin", "salmon.1", "fridge.1"))
    assert ("in", "salmon.1", "fridge.1") in s.relations
    assert "salmon.1" not in s.held


def test_find_inside_closed_container_is_rejected():
    assert is_admissible(S0, Action("find", ("milk.1",))) == (False, "not-reachable")
    s = do(S0, ("find", "fridge.1"), ("open", "fridge.1"))
    # opening the fridge exposes its contents
    assert ("close_to", AGENT, "milk.1") in s.relations
    assert is_admissible(s, Action("grab", ("milk.1",)))[0]


def test_failure_reasons_in_priority_order():
    assert is_admissible(S0, Action("teleport", ("tv.1",))) == (False, "unknown-action")
    assert is_admissible(S0, Action("grab", ())) == (False, "bad-arity")
    assert is_admissible(S0, Action("grab", ("unicorn.1",))) == (False, "unknown-object")
    assert is_admissible(S0, Action("standup", ())) == (False, "precondition-sitting")


def test_inadmissible_apply_raises_with_reason():
    with pytest.raises(InadmissibleAction) as info:
        apply(S0, Action("open", ("tv.1",)))
    assert info.value.reason == "not-close"


def test_switchon_openable_appliance_needs_it_closed():
    s = do(S0, ("find", "microwave.1"), ("open", "microwave.1"))
    assert is_admissible(s, Action("switchon", ("microwave.1",))) == (False, "must-be-closed")


@pytest.mark.parametrize("oid", sorted(S0.objects))
@pytest.mark.parametrize("closed", [True, False])
def test_open_close_exhaustive(oid, closed):
    """open/close admissibility against a direct restatement of their preconditions."""
    state = near(S0, oid)
    fluents = set(state.fluents) - {("closed", oid)}
    openable = state.objects[oid].has("openable")
    if closed and openable:
        fluents.add(("closed", oid))
    state = state.evolve(fluents=fluents)
    is_closed = ("closed", oid) in state.fluents
    ok_open, _ = is_admissible(state, Action("open", (oid,)))
    ok_close, _ = is_admissible(state, Action("close", (oid,)))
    assert ok_open == (openable and is_closed)
    assert ok_close == (openable and not is_closed)
    if ok_open:
        assert ("closed", oid) not in apply(state, Action("open", (oid,))).fluents
    if ok_close:
        assert ("closed", oid) in apply(state, Action("close", (oid,))).fluents


def test_hand_capacity():
    s = do(S0, ("find", "apple.1"), ("grab", "apple.1"), ("find", "lime.1"), ("grab", "lime.1"),
           ("find", "chips.1"))
    assert is_admissible(s, Action("grab", ("chips.1",))) == (False, "hands-full")


def test_sitting_locks_out_everything_but_standup():
    s = do(S0, ("find", "sofa.1"), ("sit", "sofa.1"))
    assert s.sitting_on == "sofa.1"
    for verb in VERBS:
        if verb == "standup":
            continue
        args = ("sofa.1",) * ARITY[verb]
        assert is_admissible(s, Action(verb, args)) == (False, "agent-sitting"), verb
    assert do(s, ("standup",)).sitting_on is None


def test_resolve_prefers_held_then_close_then_lowest():
    assert resolve_object("plate", S0) == "plate.1"
    assert resolve_object("PLATE.2", S0) == "plate.2"
    assert resolve_object("grocery bag", S0) is None
    s = do(S0, ("find", "kitchencabinet.1"), ("open", "kitchencabinet.1"))
    # close to plate.2 (inside the cabinet) only
    assert resolve_object("plate", s) == "plate.2"
    s = do(s, ("grab", "plate.2"), ("find", "kitchencounter.1"))
    # close to plate.1 now, but holding plate.2
    assert resolve_object("plate", s) == "plate.2"


# -- semantic rules --------------------------------------------------------

def _microwave_state(salmon_in: bool, switched_on: bool) -> WorldState:
    rels = set(S0.relations) - {("on", "salmon.1", "kitchentable.1")}
    rels.add(("in", "salmon.1", "microwave.1") if salmon_in else ("on", "salmon.1", "kitchentable.1"))
    flu = set(S0.fluents) - {("closed", "microwave.1")} | {("closed", "microwave.1")}
    if switched_on:
        flu.add(("switched_on", "microwave.1"))
    return S0.evolve(fluents=flu, relations=rels)


@pytest.mark.parametrize("salmon_in,switched_on", list(itertools.product([True, False], repeat=2)))
def test_heat_rule_truth_table(salmon_in, switched_on):
    state = run_semantic_rules(_microwave_state(salmon_in, switched_on))
    assert (("heated", "salmon.1") in state.fluents) == (salmon_in and switched_on)


def test_heat_rule_fires_after_one_apply():
    s = _microwave_state(True, False)
    s = near(s, "microwave.1")
    assert ("heated", "salmon.1") not in s.fluents
    s = apply(s, Action("switchon", ("microwave.1",)))
    assert ("heated", "salmon.1") in s.fluents
    # add-only: heated persists after switching off and taking it out
    s = do(s, ("switchoff", "microwave.1"), ("open", "microwave.1"), ("grab", "salmon.1"))
    assert ("heated", "salmon.1") in s.fluents


def test_rule_respects_property_eligibility():
    # a plate in a running microwave is not food, so it never becomes heated
    s = do(S0, ("find", "plate.1"), ("grab", "plate.1"), ("find", "microwave.1"), ("open", "microwave.1"),
           ("putin", "plate.1", "microwave.1"), ("close", "microwave.1"), ("switchon", "microwave.1"))
    assert ("heated", "plate.1") not in s.fluents


def test_class_terms_bind_consistently():
    objs = {o: ObjectInstance(o, o.split(".")[0], frozenset(p)) for o, p in [
        ("sink.1", {"container"}), ("sink.2", {"container"}), ("faucet.1", {"switchable"}),
        ("cup.1", {"grabbable"})]}
    rule = Rule(when=(("in", "?x", "sink"), ("on", "sink", "faucet")), add=(("washed", "?x"),))
    base = WorldState(objs, frozenset(), frozenset({("in", "cup.1", "sink.1"), ("on", "sink.2", "faucet.1")}),
                      rules=(rule,))
    # the two conjuncts mention different sinks: no firing
    assert ("washed", "cup.1") not in run_semantic_rules(base).fluents
    same = base.evolve(relations={("in", "cup.1", "sink.1"), ("on", "sink.1", "faucet.1")})
    assert ("washed", "cup.1") in run_semantic_rules(same).fluents


# -- properties ------------------------------------------------------------

@given(st.data())
@settings(max_examples=60)
def test_apply_is_deterministic_and_preserves_invariants(data):
    state = data.draw(reachable_states(S0))
    action = random_action(data.draw, state)
    ok, reason = is_admissible(state, action)
    if not ok:
        assert reason
        with pytest.raises(InadmissibleAction):
            apply(state, action)
        return
    a, b = apply(state, action), apply(state, action)
    assert a == b and a.digest() == b.digest()
    check_invariants(a)


@given(st.data())
@settings(max_examples=60)
def test_frame_property(data):
    """Facts about objects an action does not mention stay put (rules aside)."""
    state = data.draw(reachable_states(S0))
    action = random_action(data.draw, state)
    if not is_admissible(state, action)[0]:
        return
    after = apply(state, action)
    touched = set(action.args)
    derived = {"heated", "washed"}
    for fact in state.facts ^ after.facts:
        if fact[0] in derived:
            continue
        if fact[0] == "close_to" and action.verb in ("walk", "find"):
            continue
        if fact[0] == "sitting" and action.verb == "standup":
            continue
        assert touched & set(fact[1:]), (action, fact)


@given(st.data())
@settings(max_examples=40)
def test_hand_capacity_never_exceeded(data):
    state = data.draw(reachable_states(S0, max_steps=40))
    assert len(state.held) <= state.hand_capacity


@given(st.data())
@settings(max_examples=40)
def test_sitting_lockout(data):
    state = data.draw(reachable_states(S0))
    if state.sitting_on is None:
        return
    action = random_action(data.draw, state)
    ok, reason = is_admissible(state, action)
    if action.verb != "standup" and action.verb in ARITY and len(action.args) == ARITY[action.verb]:
        assert not ok and reason == "agent-sitting"


def _reachable_oracle(state, oid):
    """Graph formulation: no path from the object up to a closed container via an in-edge."""
    g = nx.DiGraph()
    for kind, child, parent in (r for r in state.relations if r[0] in ("in", "on")):
        g.add_edge(child, parent, kind=kind)
    if oid not in g:
        return True
    for parent in nx.descendants(g, oid) | {oid}:
        for _, p, data in g.out_edges(parent, data=True):
            if data["kind"] == "in" and ("closed", p) in state.fluents:
                return False
    return True


@given(st.data())
@settings(max_examples=40)
def test_reachable_matches_graph_oracle(data):
    state = data.draw(reachable_states(S0))
    for oid in state.objects:
        assert reachable(state, oid) == _reachable_oracle(state, oid), oid


# -- invariants and scene loading ----------------------------------------

def test_invariant_violations_name_the_object():
    bad = S0.evolve(relations=set(S0.relations) | {("holds", AGENT, "fridge.1")})
    with pytest.raises(InvariantViolation) as info:
        check_invariants(bad)
    assert info.value.obj == "fridge.1"
    bad = S0.evolve(fluents=set(S0.fluents) | {("switched_on", "salmon.1")})
    with pytest.raises(InvariantViolation, match="salmon.1"):
        check_invariants(bad)


def test_scene_round_trip():
    again = parse_scene(__import__("json").dumps(scene_to_dict(ENV0)))
    assert again.state == ENV0.state
    assert scene_to_dict(again) == scene_to_dict(ENV0)


@pytest.mark.parametrize("doc,needle", [
    ('{"objects": [{"id": "tv.1", "class": "tv", "properties": [], "colour": "red"}]}', "colour"),
    ('{"objects": [{"id": "tv", "class": "tv", "properties": []}]}', "tv"),
    ('{"objects": [{"id": "tv.1", "class": "tv", "properties": ["shiny"]}]}', "shiny"),
    ('{"objects": [], "fluents": [["closed", "box.1"]]}', "box.1"),
    ('{"objects": [{"id": "tv.1", "class": "tv", "properties": []}], "extra": 1}', "extra"),
    ('{"objects": [{"id": "tv.1", "class": "tv", "properties": []}], '
     '"rules": [{"when": [["in", "?x", "tv"]], "add": [["heated", "?y"]]}]}', "?y"),
])
def test_scene_loader_rejects(doc, needle):
    with pytest.raises(WorldError, match=__import__("re").escape(needle)):
        parse_scene(doc, "bad.json")


def test_scene_json_error_has_location():
    with pytest.raises(SceneError, match=r"bad\.json:2:"):
        parse_scene('{"objects": [\n  oops]}', "bad.json")


def test_missing_scene_file():
    with pytest.raises((SceneError, OSError)):
        load_scene("/nonexistent/scene.json")
