import pytest

from manhattan.automaton import LABELS, minimal_cone_automaton
from manhattan.fixtures import load_fixture
from manhattan.thermo import ManhattanCurve

FREE_HORIZON = 8
FREE_CERTIFICATION_HORIZON = 10
TRIANGLE_HORIZON = 12


@pytest.fixture(scope='session')
def free_fixture():
    return load_fixture('free_f2')


@pytest.fixture(scope='session')
def free_oracle(free_fixture):
    return free_fixture.oracle('Sstar', ['S'], FREE_HORIZON)


@pytest.fixture(scope='session')
def deep_free_oracle(free_fixture):
    return free_fixture.oracle('Sstar', ['S'], FREE_CERTIFICATION_HORIZON)


@pytest.fixture(scope='session')
def free_automaton(free_fixture):
    return free_fixture.automaton('Sstar')


@pytest.fixture(scope='session')
def free_curve(free_automaton):
    return ManhattanCurve(free_automaton, 'S')


@pytest.fixture(scope='session')
def free_dual_curve(free_fixture):
    return ManhattanCurve(free_fixture.automaton('S'), 'Sstar')


@pytest.fixture(scope='session')
def constant_curve(free_automaton):
    return ManhattanCurve(free_automaton, 'Sstar')


@pytest.fixture(scope='session')
def triangle_fixture():
    return load_fixture('triangle_334')


@pytest.fixture(scope='session')
def triangle_oracle(triangle_fixture):
    return triangle_fixture.oracle('Sstar', ['S'], TRIANGLE_HORIZON)


@pytest.fixture(scope='session')
def triangle_build(triangle_oracle):
    return minimal_cone_automaton(triangle_oracle, ['S'], weighting=LABELS)


@pytest.fixture(scope='session')
def triangle_curve(triangle_build, triangle_fixture):
    automaton, _ = triangle_build
    return ManhattanCurve(automaton.with_meta(group=triangle_fixture.name), 'S')


@pytest.fixture(scope='session')
def triangle_increment_build(triangle_oracle):
    return minimal_cone_automaton(triangle_oracle, ['S'])


@pytest.fixture(scope='session')
def triangle_increment_curve(triangle_increment_build, triangle_fixture):
    automaton, _ = triangle_increment_build
    return ManhattanCurve(automaton.with_meta(group=triangle_fixture.name), 'S')
