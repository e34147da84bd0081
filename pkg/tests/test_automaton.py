import json

import pytest

from manhattan.automaton import INCREMENTS, LABELS, AutomatonError, ConeTypeError, GeodesicAutomaton, \
    analyze_graph, build_cone_automaton, certify, describe_changes, diff_automata, dumps, load_automaton, loads, \
    minimal_cone_automaton, minimize, save_automaton


def test_load_shipped(free_automaton):
    assert free_automaton.states == 4
    assert len(free_automaton.edges) == 18
    assert free_automaton.weight_names == ('S', 'Sstar')
    assert free_automaton.meta['group'] == 'free_f2'
    assert free_automaton.meta['base'] == 'Sstar'


def test_edges_are_sorted(free_automaton):
    keys = [(edge.source, free_automaton.position(edge.label), edge.target) for edge in free_automaton.edges]
    assert keys == sorted(keys)


def test_dumps_loads(free_automaton, tmpdir):
    location = str(tmpdir.join('Sstar.json'))
    save_automaton(free_automaton, location)
    loaded = load_automaton(location)
    assert diff_automata(free_automaton, loaded) == []
    assert loaded.meta == free_automaton.meta
    data = json.loads(dumps(loaded))
    assert list(data) == ['states', 'initial', 'alphabet', 'edges', 'meta']
    assert data['edges'][2] == {'from': 0, 'to': 2, 'label': 'c', 'weights': {'S': 2, 'Sstar': 1}}


def test_loads_parse_error():
    with pytest.raises(AutomatonError) as e:
        loads(u'{"states": 1')
    assert u'parse error' in str(e.value)


def test_loads_missing_field():
    with pytest.raises(AutomatonError) as e:
        loads(u'{"states": 1, "initial": 0, "alphabet": []}')
    assert u'parse error' in str(e.value)


def test_unreachable_state():
    with pytest.raises(AutomatonError) as e:
        GeodesicAutomaton(3, 0, [u'a'], [(0, 1, u'a', {}), (1, 1, u'a', {})])
    assert u'unreachable state(s) from initial: 2' in str(e.value)


def test_missing_weight_entry():
    with pytest.raises(AutomatonError) as e:
        GeodesicAutomaton(2, 0, [u'a', u'b'], [(0, 1, u'a', {'w': 1}), (1, 1, u'b', {})])
    assert u'missing weight entry w' in str(e.value)


def test_unknown_label():
    with pytest.raises(AutomatonError):
        GeodesicAutomaton(2, 0, [u'a'], [(0, 1, u'x', {})])


def test_negative_running_sum():
    with pytest.raises(AutomatonError):
        GeodesicAutomaton(2, 0, [u'a', u'b'], [(0, 1, u'a', {'w': -1}), (1, 1, u'b', {'w': 1})])


@pytest.mark.parametrize('name', ['label', 'key', 'weights'])
def test_weight_named_like_an_edge_attribute(name):
    automaton = loads(json.dumps({'states': 2, 'initial': 0, 'alphabet': ['a', 'b'], 'edges': [
        {'from': 0, 'to': 1, 'label': 'a', 'weights': {name: 1}},
        {'from': 1, 'to': 1, 'label': 'b', 'weights': {name: 2}}]}))
    assert automaton.weight_names == (name,)
    assert automaton.graph()[0][1][0]['weights'] == {name: 1}


def test_negative_running_sum_on_parallel_edges():
    with pytest.raises(AutomatonError) as e:
        GeodesicAutomaton(2, 0, [u'a', u'b'], [(0, 1, u'a', {'w': 1}), (0, 1, u'b', {'w': -1})])
    assert u'negative running sum at state 1' in str(e.value)


def test_analyze_graph(free_automaton):
    analysis = analyze_graph(free_automaton)
    assert len(analysis) == 1
    component = analysis.components[0]
    assert component.states == frozenset([1, 2, 3])
    assert len(component.edges) == 12
    assert component.period == 1


def test_analyze_letter_automaton(free_fixture):
    automaton = load_automaton(free_fixture.automaton_path('Sstar-letters'))
    analysis = analyze_graph(automaton)
    assert [len(component.edges) for component in analysis] == [24]


def test_analyze_reachability():
    automaton = GeodesicAutomaton(3, 0, [u'a', u'b', u'c'], [
        (0, 1, u'a', {}), (1, 1, u'a', {}), (1, 2, u'c', {}), (2, 2, u'a', {}), (2, 2, u'b', {})])
    analysis = analyze_graph(automaton)
    first, second = analysis.components
    assert analysis.reaches(first, second)
    assert not analysis.reaches(second, first)


def test_period_of_a_two_cycle():
    automaton = GeodesicAutomaton(3, 0, [u'a', u'b'], [(0, 1, u'a', {}), (1, 2, u'a', {}), (2, 1, u'b', {})])
    assert analyze_graph(automaton).components[0].period == 2


def test_certify_shipped(free_automaton, free_oracle):
    report = certify(free_automaton, free_oracle, {'S': 'S'})
    assert report.ok
    assert report.depth == free_oracle.horizon
    assert str(report) == u'certified to depth 8'


def test_certify_both_weights(free_automaton, small_free_oracle):
    report = certify(free_automaton, small_free_oracle, {'S': 'S', 'Sstar': 'Sstar'})
    assert report.ok


def test_certify_wrong_weight(free_automaton, small_free_oracle):
    edges = [(edge.source, edge.target, edge.label, {'S': edge.weights['S']}) for edge in free_automaton.edges]
    edges[2] = (0, 2, u'c', {'S': 1})
    broken = GeodesicAutomaton(4, 0, free_automaton.alphabet, edges)
    report = certify(broken, small_free_oracle, {'S': 'S'})
    assert not report.ok
    assert not report.weights_ok['S']
    assert report.witness == u'c'
    assert report.checked == 0


def test_certify_missing_edge(free_automaton, small_free_oracle):
    edges = [(edge.source, edge.target, edge.label, edge.weights) for edge in free_automaton.edges
             if (edge.source, edge.label) != (2, u'A')]
    report = certify(GeodesicAutomaton(4, 0, free_automaton.alphabet, edges), small_free_oracle, {'S': 'S'})
    assert not report.bijection_ok
    assert report.checked == 1


def test_certify_non_geodesic(small_free_oracle):
    edges = [(0, 1, label, {}) for label in u'abcABC'] + [(1, 1, u'a', {}), (1, 1, u'A', {})]
    automaton = GeodesicAutomaton(2, 0, u'abcABC', edges)
    report = certify(automaton, small_free_oracle, {})
    assert not report.geodesic_ok
    assert report.witness == u'aA'


@pytest.fixture(scope='module')
def small_free_oracle(free_fixture):
    return free_fixture.oracle('Sstar', ['S'], 6)


def test_build_cone_automaton(free_automaton, small_free_oracle):
    automaton, report = build_cone_automaton(small_free_oracle, ['S', 'Sstar'], 1)
    assert report.ok
    assert diff_automata(automaton, free_automaton) == []
    assert automaton.meta['depth'] == 6
    assert automaton.meta['base'] == 'Sstar'


def test_minimal_cone_automaton(small_free_oracle):
    automaton, report = minimal_cone_automaton(small_free_oracle, ['S'])
    assert report.ok
    assert automaton.states == 4
    assert len(automaton.edges) == 18


def test_cone_depth_too_small(small_free_oracle):
    with pytest.raises(ConeTypeError):
        build_cone_automaton(small_free_oracle, ['S'], 5)


def test_minimize_letter_automaton(free_fixture, free_automaton):
    letters = load_automaton(free_fixture.automaton_path('Sstar-letters'))
    assert diff_automata(minimize(letters), free_automaton) == []


def test_diff_automata_reports_changes(free_automaton):
    changed = GeodesicAutomaton(4, 0, free_automaton.alphabet, [
        (edge.source, edge.target, edge.label, {'S': edge.weights['S'] + (1 if edge.label == u'a' else 0)})
        for edge in free_automaton.edges])
    original = GeodesicAutomaton(4, 0, free_automaton.alphabet, [
        (edge.source, edge.target, edge.label, {'S': edge.weights['S']}) for edge in free_automaton.edges])
    changes = diff_automata(original, changed)
    assert len(changes) == 3
    assert all(change[0] == 'change' for change in changes)
    assert (u'~', u'edge 0 -a-> weight S 1 -> 2') in describe_changes(changes)


def test_triangle_component(triangle_build):
    automaton, report = triangle_build
    assert report.ok
    assert report.depth == 12
    assert max(len(component.edges) for component in analyze_graph(automaton)) == 21


def test_triangle_label_weights(triangle_build):
    automaton, _ = triangle_build
    assert automaton.meta['weighting'] == LABELS
    assert automaton.states == 12
    weights = dict((edge.label, edge.weights['S']) for edge in automaton.edges)
    assert weights == {u'a': 1, u'A': 1, u'b': 1, u'B': 1, u'c': 1, u'C': 1, u'd': 2}


def test_triangle_label_weights_are_not_lengths(triangle_build, triangle_oracle):
    automaton, _ = triangle_build
    assert certify(automaton, triangle_oracle).ok
    report = certify(automaton, triangle_oracle, {'S': 'S'})
    assert not report.ok
    assert not report.weights_ok['S']
    assert u'weight S sums to' in report.reason


def test_triangle_increment_component(triangle_increment_build):
    automaton, report = triangle_increment_build
    assert report.ok
    assert report.depth == 12
    assert automaton.meta['weighting'] == INCREMENTS
    assert max(len(component.edges) for component in analyze_graph(automaton)) == 34


def test_certify_free_group_to_depth_ten(free_automaton, deep_free_oracle):
    report = certify(free_automaton, deep_free_oracle, {'S': 'S', 'Sstar': 'Sstar'})
    assert report.ok
    assert str(report) == u'certified to depth 10'


def test_unknown_weighting(small_free_oracle):
    with pytest.raises(AutomatonError):
        build_cone_automaton(small_free_oracle, ['S'], 1, weighting='lengths')


def test_label_weighted_free_automaton(small_free_oracle):
    automaton, report = build_cone_automaton(small_free_oracle, ['S'], 1, weighting=LABELS)
    assert report.ok
    assert automaton.states == 4
    assert dict((edge.label, edge.weights['S']) for edge in automaton.edges) == {
        u'a': 1, u'b': 1, u'c': 2, u'A': 1, u'B': 1, u'C': 2}
    assert certify(automaton, small_free_oracle, {'S': 'S'}).ok


def test_describe_added_and_removed_edges():
    first = GeodesicAutomaton(2, 0, [u'a', u'b'], [(0, 1, u'a', {'w': 1}), (1, 1, u'a', {'w': 1})])
    second = GeodesicAutomaton(2, 0, [u'a', u'b'], [
        (0, 1, u'a', {'w': 1}), (1, 1, u'a', {'w': 1}), (1, 0, u'b', {'w': 2})])
    assert describe_changes(diff_automata(first, second)) == [(u'+', u'edge 1 -b-> 0 [w=2]')]
    assert describe_changes(diff_automata(second, first)) == [(u'-', u'edge 1 -b-> 0 [w=2]')]


def test_describe_retargeted_edge():
    first = GeodesicAutomaton(2, 0, [u'a'], [(0, 1, u'a', {}), (1, 1, u'a', {})])
    second = GeodesicAutomaton(2, 0, [u'a'], [(0, 1, u'a', {}), (1, 0, u'a', {})])
    assert describe_changes(diff_automata(first, second)) == [(u'~', u'edge 1 -a-> target 1 -> 0')]


def test_describe_letter_automaton(free_fixture, free_automaton):
    letters = load_automaton(free_fixture.automaton_path('Sstar-letters'))
    lines = describe_changes(diff_automata(free_automaton, letters))
    assert (u'~', u'states: 4 -> 7') in lines
    assert all(sign in (u'+', u'-', u'~') for sign, _ in lines)
    assert any(text.startswith(u'edge 4 -') for sign, text in lines if sign == u'+')


def test_shipped_automata_certify_to_recorded_depth(free_fixture, deep_free_oracle):
    for name in ('Sstar', 'Sstar-letters'):
        automaton = load_automaton(free_fixture.automaton_path(name))
        assert automaton.meta['depth'] == 10
        assert certify(automaton, deep_free_oracle).ok


def test_shipped_s_automaton_certifies_to_recorded_depth(free_fixture):
    automaton = free_fixture.automaton('S')
    assert automaton.meta['depth'] == 10
    assert certify(automaton, free_fixture.oracle('S', ['Sstar'], 10)).ok
