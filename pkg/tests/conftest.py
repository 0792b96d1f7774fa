import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from codeplan.dataset import load_dataset
from codeplan.resources import TASKS_PATH, scene_path
from codeplan.scene import load_scene
from codeplan.world import ARITY, VERBS, Action, WorldState, apply, is_admissible

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def env0():
    return load_scene(scene_path("env0"))


@pytest.fixture(scope="session")
def tasks():
    return load_dataset(TASKS_PATH)


@pytest.fixture(scope="session")
def task_by_name(tasks):
    return {t.instruction: t for t in tasks}


def random_action(draw, state: WorldState) -> Action:
    ids = sorted(state.objects)
    verb = draw(st.sampled_from(VERBS))
    args = tuple(draw(st.sampled_from(ids)) for _ in range(ARITY[verb]))
    return Action(verb, args)


@st.composite
def reachable_states(draw, initial: WorldState, max_steps: int = 25, bias_admissible: bool = True):
    """States reached from ``initial`` by admissible random actions.

    Near-object actions are picked from the close cluster most of the time so
    walks get past the first find.
    """
    state = initial
    for _ in range(draw(st.integers(0, max_steps))):
        if bias_admissible and state.close and draw(st.booleans()):
            verb = draw(st.sampled_from(VERBS))
            near = sorted(state.close)
            args = tuple(draw(st.sampled_from(near)) for _ in range(ARITY[verb]))
            action = Action(verb, args)
        else:
            action = random_action(draw, state)
        if is_admissible(state, action)[0]:
            state = apply(state, action)
    return state


# -- acceptance summary ----------------------------------------------------

_ACCEPTANCE: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and item.function.__doc__:
        if report.when == "call" or (report.when == "setup" and report.failed):
            label = item.function.__doc__.strip().splitlines()[0]
            if hasattr(item, "callspec"):
                label += f" [{item.callspec.id}]"
            _ACCEPTANCE.append(("PASS" if report.passed else "FAIL", label))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] {label}")
