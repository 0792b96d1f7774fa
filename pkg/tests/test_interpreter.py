import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codeplan.interpreter import (
    ASSERTION_HELD,
    EXECUTED,
    FAILED,
    RECOVERED,
    SKIPPED_COMMENT,
    UNPARSEABLE,
    UNRECOVERED,
    dumps_trace,
    evaluate_condition,
    execute,
    trace_records,
    write_trace_jsonl,
)
from codeplan.llm import AssertionOracle, CallableBackend
from codeplan.metrics import exec_fraction
from codeplan.planlang import Condition, parse_program
from codeplan.resources import scene_path
from codeplan.scene import load_scene

from cases import FIG3, RECOVERY_PAIRS
from conftest import reachable_states

S0 = load_scene(scene_path("env0")).state


def statuses(trace):
    return [s.status for s in trace.steps]


def test_fig3_program_executes():
    trace = execute(parse_program(FIG3), S0)
    assert exec_fraction(trace) == 1.0
    assert statuses(trace).count(SKIPPED_COMMENT) == 2
    assert statuses(trace).count(ASSERTION_HELD) == 3
    final = trace.final_state
    assert ("in", "salmon.1", "microwave.1") in final.relations
    assert ("closed", "microwave.1") in final.fluents


def test_comment_only_program_changes_nothing(caplog):
    trace = execute(parse_program("def f():\n    # think\n    # more\n"), S0)
    assert trace.final_state == S0
    assert statuses(trace) == [SKIPPED_COMMENT, SKIPPED_COMMENT]
    assert exec_fraction(trace) == 1.0
    assert "no actions" in caplog.text


def test_failures_do_not_stop_execution():
    prog = parse_program("def f():\n    grab('salmon')\n    take_out('x')\n    find('unicorn')\n"
                         "    walk to tv\n    find('salmon')\n    grab('salmon')\n")
    trace = execute(prog, S0)
    assert statuses(trace) == [FAILED, FAILED, FAILED, UNPARSEABLE, EXECUTED, EXECUTED]
    assert [s.reason for s in trace.steps[:3]] == ["not-close", "unknown-action", "unknown-object"]
    assert exec_fraction(trace) == pytest.approx(2 / 6)


def test_recovery_records_and_order():
    prog = parse_program("def f():\n    assert('close' to 'salmon') else: find('salmon')\n    grab('salmon')\n")
    trace = execute(prog, S0)
    assert statuses(trace) == [EXECUTED, RECOVERED, EXECUTED]
    assert trace.steps[0].recovery_of == 0
    assert exec_fraction(trace) == 1.0


def test_unrecovered_assert_continues():
    prog = parse_program("def f():\n    assert('close' to 'milk') else: find('milk')\n    find('tv')\n")
    trace = execute(prog, S0)
    assert statuses(trace) == [FAILED, UNRECOVERED, EXECUTED]
    assert trace.steps[0].reason == "not-reachable"


@pytest.mark.parametrize("name,full,reduced", RECOVERY_PAIRS, ids=[p[0] for p in RECOVERY_PAIRS])
def test_recovery_pairs(name, full, reduced):
    a = execute(parse_program(full), S0)
    b = execute(parse_program(reduced), S0)
    assert a.final_state == b.final_state
    assert RECOVERED in statuses(b)


def test_names_resolve_to_the_instance_in_reach():
    s = execute(parse_program("def f():\n    find('kitchencabinet.1')\n    open('kitchencabinet')\n"
                              "    grab('plate')\n"), S0).final_state
    assert "plate.2" in s.held


def _random_condition(data, state):
    classes = state.class_names()
    kind = data.draw(st.sampled_from(("close_to", "is", "in", "on")))
    obj = data.draw(st.sampled_from(classes))
    arg = None
    if kind == "is":
        arg = data.draw(st.sampled_from(["open", "closed", "on", "off", "heated", "washed", "sparkly"]))
    elif kind != "close_to":
        arg = data.draw(st.sampled_from(classes + ["hands"]))
    return Condition(kind, obj, arg, data.draw(st.booleans()))


def _oracle_truth(cond, state):
    """Straight restatement over the lowest/held/close instance choice."""
    def pick(name):
        ids = state.instances(name)
        for pool in (state.held, state.close):
            for oid in ids:
                if oid in pool:
                    return oid
        return ids[0] if ids else None

    oid = pick(cond.obj)
    if cond.kind == "close_to":
        v = ("close_to", "agent", oid) in state.relations
    elif cond.kind == "is":
        table = {"open": ("closed", False), "closed": ("closed", True), "on": ("switched_on", True),
                 "off": ("switched_on", False), "heated": ("heated", True), "washed": ("washed", True)}
        if cond.arg not in table:
            return False
        pred, want = table[cond.arg]
        v = ((pred, oid) in state.fluents) == want
    elif cond.arg == "hands" and cond.kind == "in":
        v = ("holds", "agent", oid) in state.relations
    else:
        tgt = pick(cond.arg)
        if tgt is None:
            return False
        v = (cond.kind, oid, tgt) in state.relations
    return v != cond.negated


@given(st.data())
@settings(max_examples=100)
def test_evaluate_condition_on_random_states(data):
    state = data.draw(reachable_states(S0))
    cond = _random_condition(data, state)
    assert evaluate_condition(cond, state) == _oracle_truth(cond, state)


@pytest.mark.parametrize("name,full,reduced", RECOVERY_PAIRS, ids=[p[0] for p in RECOVERY_PAIRS])
def test_llm_mode_with_oracle_matches_symbolic(name, full, reduced):
    prog = parse_program(reduced)
    a = execute(prog, S0)
    b = execute(prog, S0, assertion_mode="llm", backend=AssertionOracle())
    assert list(trace_records(a)) == list(trace_records(b))


def test_llm_mode_uses_backend_answers():
    prog = parse_program("def f():\n    assert('close' to 'tv') else: find('tv')\n")
    liar = CallableBackend(lambda r: "True")
    assert statuses(execute(prog, S0, "llm", liar)) == [ASSERTION_HELD]
    seen = []
    skeptic = CallableBackend(lambda r: seen.append(r.seed_tag) or "False")
    assert statuses(execute(prog, S0, "llm", skeptic, task="t")) == [EXECUTED, UNRECOVERED]
    assert seen == ["t@assert0", "t@assert0"]


def test_bad_mode():
    with pytest.raises(ValueError):
        execute(parse_program(FIG3), S0, assertion_mode="vibes")
    with pytest.raises(ValueError):
        execute(parse_program(FIG3), S0, assertion_mode="llm")


def test_trace_export(tmp_path):
    trace = execute(parse_program(FIG3), S0)
    path = tmp_path / "t" / "trace.jsonl"
    write_trace_jsonl(trace, path)
    rows = [json.loads(l) for l in path.read_text().splitlines()]
    assert len(rows) == len(trace.steps)
    assert rows[1]["source"] == "find('salmon')" and rows[1]["added"] == ["close_to(agent, salmon.1)"]
    assert rows[-1]["state_digest"] == trace.final_state.digest()
    assert dumps_trace(trace) == path.read_text()
