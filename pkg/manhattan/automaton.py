import json
import logging
from collections import namedtuple, OrderedDict, deque
from functools import reduce
from math import gcd

import click_log
import networkx as nx
import numpy as np
from dictdiffer import diff

from manhattan.group import ManhattanError
from manhattan.cayley import HorizonExceeded

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

FORMAT_FIELDS = ('states', 'initial', 'alphabet', 'edges')
INCREMENTS = 'increments'
LABELS = 'labels'
WEIGHTINGS = (INCREMENTS, LABELS)

Edge = namedtuple('Edge', 'source target label weights')
Component = namedtuple('Component', 'index states edges period')


class GeodesicAutomaton(object):
    def __init__(self, states, initial, alphabet, edges, meta=None):
        self.states = int(states)
        self.initial = int(initial)
        self.alphabet = tuple(alphabet)
        self.meta = OrderedDict(sorted((meta or {}).items()))
        self._position = dict((label, i) for i, label in enumerate(self.alphabet))

        if self.states < 1:
            raise AutomatonError(u'Automaton needs at least one state')
        if not 0 <= self.initial < self.states:
            raise AutomatonError(u'Initial state %d out of range' % self.initial)

        names = None
        checked = []
        for edge in edges:
            source, target, label, weights = edge
            if not (0 <= source < self.states and 0 <= target < self.states):
                raise AutomatonError(u'Edge %s -%s-> %s leaves the state range' % (source, label, target))
            if label not in self._position:
                raise AutomatonError(u'Edge %s -%s-> %s has unknown label "%s"' % (source, label, target, label))
            weights = dict((name, int(value)) for name, value in weights.items())
            if names is None:
                names = set(weights)
            elif set(weights) != names:
                missing = sorted(names.symmetric_difference(weights))
                raise AutomatonError(u'Edge %s -%s-> %s: missing weight entry %s' % (
                    source, label, target, u', '.join(missing)))
            checked.append(Edge(int(source), int(target), label, weights))

        self.edges = tuple(sorted(checked, key=lambda e: (e.source, self._position[e.label], e.target)))
        self.weight_names = tuple(sorted(names or ()))
        self._out = [[] for _ in range(self.states)]
        for index, edge in enumerate(self.edges):
            self._out[edge.source].append(index)

        self._check_reachable()
        for name in self.weight_names:
            self._check_running_sums(name)

    def __repr__(self):
        return u'<GeodesicAutomaton states=%d edges=%d weights=%s>' % (
            self.states, len(self.edges), u','.join(self.weight_names))

    def position(self, label):
        return self._position[label]

    def out_edges(self, state):
        return [self.edges[index] for index in self._out[state]]

    def out_indices(self, state):
        return self._out[state]

    def graph(self):
        graph = nx.MultiDiGraph()
        graph.add_nodes_from(range(self.states))
        for index, edge in enumerate(self.edges):
            graph.add_edge(edge.source, edge.target, key=index, label=edge.label, weights=edge.weights)
        return graph

    def _check_reachable(self):
        graph = self.graph()
        reachable = nx.descendants(graph, self.initial) | set([self.initial])
        unreachable = sorted(set(range(self.states)) - reachable)
        if unreachable:
            raise AutomatonError(u'unreachable state(s) from initial: %s' % u', '.join(map(str, unreachable)))

    def _check_running_sums(self, name):
        try:
            distances = nx.single_source_bellman_ford_path_length(
                self.graph(), self.initial, weight=lambda u, v, keyed: min(d['weights'][name] for d in keyed.values()))
        except nx.NetworkXUnbounded:
            raise AutomatonError(u'Weight %s has a negative cycle' % name)
        negative = sorted(state for state, value in distances.items() if value < 0)
        if negative:
            raise AutomatonError(u'Weight %s has a negative running sum at state %d' % (name, negative[0]))

    def weight_vector(self, name, indices=None):
        indices = range(len(self.edges)) if indices is None else indices
        return np.array([self.edges[index].weights[name] for index in indices], dtype=np.int64)

    def with_meta(self, **meta):
        merged = dict(self.meta)
        merged.update(meta)
        return GeodesicAutomaton(self.states, self.initial, self.alphabet, self.edges, merged)

    def to_dict(self):
        return OrderedDict([
            ('states', self.states),
            ('initial', self.initial),
            ('alphabet', list(self.alphabet)),
            ('edges', [OrderedDict([('from', e.source), ('to', e.target), ('label', e.label),
                                    ('weights', OrderedDict(sorted(e.weights.items())))]) for e in self.edges]),
            ('meta', self.meta),
        ])

    def comparable(self):
        """Plain data for diffing; edges are keyed by source state and label."""
        edges = OrderedDict()
        for edge in self.edges:
            key = u'%d -%s->' % (edge.source, edge.label)
            if key in edges:
                key = u'%s %d' % (key, edge.target)
            edges[key] = {'to': edge.target, 'weights': dict(edge.weights)}
        return {'states': self.states, 'initial': self.initial, 'alphabet': list(self.alphabet), 'edges': edges}


def dumps(automaton):
    return json.dumps(automaton.to_dict(), indent=2) + u'\n'


def loads(text):
    try:
        data = json.loads(text)
    except ValueError as e:
        raise AutomatonError(u'parse error: %s' % e)
    if not isinstance(data, dict) or any(field not in data for field in FORMAT_FIELDS):
        raise AutomatonError(u'parse error: automaton needs the fields %s' % u', '.join(FORMAT_FIELDS))
    try:
        edges = [(edge['from'], edge['to'], edge['label'], edge.get('weights', {})) for edge in data['edges']]
    except (KeyError, TypeError) as e:
        raise AutomatonError(u'parse error: malformed edge (%s)' % e)
    return GeodesicAutomaton(data['states'], data['initial'], data['alphabet'], edges, data.get('meta'))


def load_automaton(path):
    with open(path) as f:
        return loads(f.read())


def save_automaton(automaton, path):
    with open(path, 'w') as f:
        f.write(dumps(automaton))


def diff_automata(first, second):
    return list(diff(first.comparable(), second.comparable(), dot_notation=False))


def _edge_text(key, edge):
    weights = u' '.join(u'%s=%s' % item for item in sorted(edge['weights'].items()))
    return u'%s %d [%s]' % (key, edge['to'], weights)


def describe_changes(changes):
    """
    Readable lines for the output of diff_automata as (sign, text) pairs; sign
    is '+' for additions, '-' for removals and '~' for changed values.
    """
    lines = []
    for kind, node, values in changes:
        node = node if isinstance(node, list) else [node]
        sign = {'add': u'+', 'remove': u'-', 'change': u'~'}[kind]
        if node == ['edges']:
            lines.extend((sign, u'edge %s' % _edge_text(key, edge)) for key, edge in values)
        elif node[:1] == ['edges'] and node[2:] == ['to']:
            lines.append((sign, u'edge %s target %s -> %s' % (node[1], values[0], values[1])))
        elif node[:1] == ['edges'] and node[2:3] == ['weights'] and kind == 'change':
            lines.append((sign, u'edge %s weight %s %s -> %s' % (node[1], node[3], values[0], values[1])))
        elif node[:1] == ['edges']:
            lines.extend((sign, u'edge %s weight %s %s' % (node[1], name, value)) for name, value in values)
        elif kind == 'change':
            lines.append((sign, u'%s: %s -> %s' % (u' '.join(u'%s' % part for part in node), values[0], values[1])))
        else:
            where = u' '.join(u'%s' % part for part in node) or u'automaton'
            lines.extend((sign, u'%s: %s' % (where, value)) for _, value in values)
    return lines


class ComponentAnalysis(object):
    """
    Strongly connected components of an automaton. Only components carrying at
    least one internal edge are listed; the condensation covers every state.
    """

    def __init__(self, automaton, components, condensation, closure):
        self.automaton = automaton
        self.components = components
        self.condensation = condensation
        self._closure = closure

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def node(self, component):
        return self.condensation.graph['mapping'][min(component.states)]

    def reaches(self, first, second):
        return self._closure.has_edge(self.node(first), self.node(second))


def _period(states, edges):
    root = min(states)
    level = {root: 0}
    adjacency = {}
    for edge in edges:
        adjacency.setdefault(edge.source, []).append(edge.target)
    queue = deque([root])
    while queue:
        state = queue.popleft()
        for target in adjacency.get(state, ()):
            if target not in level:
                level[target] = level[state] + 1
                queue.append(target)
    return reduce(gcd, (abs(level[e.source] + 1 - level[e.target]) for e in edges), 0)


def analyze_graph(automaton):
    graph = nx.DiGraph()
    graph.add_nodes_from(range(automaton.states))
    graph.add_edges_from((edge.source, edge.target) for edge in automaton.edges)
    sccs = sorted((frozenset(scc) for scc in nx.strongly_connected_components(graph)), key=min)

    components = []
    for scc in sccs:
        inside = [index for index, edge in enumerate(automaton.edges) if edge.source in scc and edge.target in scc]
        if inside:
            period = _period(scc, [automaton.edges[index] for index in inside])
            components.append(Component(len(components), scc, tuple(inside), period))

    condensation = nx.condensation(graph, scc=sccs)
    closure = nx.transitive_closure_dag(condensation)
    logger.debug(u'%d recurrent components with edge counts %s', len(components),
                 [len(component.edges) for component in components])
    return ComponentAnalysis(automaton, components, condensation, closure)


class CertificationReport(namedtuple('CertificationReport',
                                     'depth checked bijection_ok geodesic_ok weights_ok witness reason')):
    @property
    def ok(self):
        return self.bijection_ok and self.geodesic_ok and all(self.weights_ok.values())

    def __str__(self):
        if self.ok:
            return u'certified to depth %d' % self.depth
        return u'certification failed at length %d: %s (witness "%s")' % (self.checked + 1, self.reason, self.witness)


def certify(automaton, oracle, weight_bindings=None, depth=None):
    """
    Compare the accepted paths of the automaton with the base spheres of the
    oracle layer by layer. Stops at the first failing length. Label-length
    weights are not bound by default.
    """
    depth = oracle.horizon if depth is None else depth
    if depth > oracle.horizon:
        raise HorizonExceeded(u'Certification depth %d exceeds the oracle horizon %d' % (depth, oracle.horizon))
    if weight_bindings is None:
        certified = () if automaton.meta.get('weighting') == LABELS else automaton.weight_names
        weight_bindings = dict((name, name) for name in certified if name in oracle.metrics)
    for name in weight_bindings:
        if name not in automaton.weight_names:
            raise AutomatonError(u'Automaton has no weight %s' % name)

    labels = oracle.base.labels
    unknown = [label for label in automaton.alphabet if label not in labels]
    if unknown:
        raise AutomatonError(u'Labels %s are not generators of %s' % (u' '.join(unknown), oracle.base.name))
    column = dict((label, labels.index(label)) for label in automaton.alphabet)

    table = oracle.table
    successors = table.successors()
    names = sorted(weight_bindings)
    targets = [oracle.lengths(weight_bindings[name]) for name in names]
    outgoing = [automaton.out_edges(state) for state in range(automaton.states)]
    weights_ok = dict((name, True) for name in names)

    def report(checked, bijection=True, geodesic=True, witness=None, reason=None):
        return CertificationReport(depth, checked, bijection, geodesic, weights_ok, witness, reason)

    frontier = [(automaton.initial, 0, (0,) * len(names), u'')]
    for n in range(1, depth + 1):
        layer = table.layer(n)
        expected = len(layer)
        following = []
        seen = set()
        for state, element, sums, word in frontier:
            for edge in outgoing[state]:
                path = word + edge.label
                child = int(successors[element, column[edge.label]])
                if child not in layer:
                    return report(n - 1, geodesic=False, witness=path, reason=u'label word is not geodesic')
                if child in seen:
                    return report(n - 1, bijection=False, witness=path,
                                  reason=u'two paths reach the same element')
                seen.add(child)
                totals = tuple(total + edge.weights[name] for total, name in zip(sums, names))
                for name, total, lengths in zip(names, totals, targets):
                    if total != lengths[child]:
                        weights_ok[name] = False
                        return report(n - 1, witness=path, reason=u'weight %s sums to %d but length is %d' % (
                            name, total, lengths[child]))
                following.append((edge.target, child, totals, path))
        if len(following) != expected:
            missing = next(index for index in layer if index not in seen)
            return report(n - 1, bijection=False, witness=table.word(missing),
                          reason=u'%d paths of length %d but %d sphere elements' % (len(following), n, expected))
        frontier = following
        logger.debug(u'Certified length %d (%d paths)', n, expected)
    return report(depth)


def _canonical(initial, transitions):
    """Renumber states breadth-first from the initial state; transitions map state -> [(position, label, ...)]."""
    numbering = {initial: 0}
    queue = deque([initial])
    while queue:
        state = queue.popleft()
        for entry in sorted(transitions.get(state, ())):
            target = entry[2]
            if target not in numbering:
                numbering[target] = len(numbering)
                queue.append(target)
    return numbering


def minimize(automaton):
    """Moore partition refinement over (label, weights, target block)."""
    for state in range(automaton.states):
        labels = [edge.label for edge in automaton.out_edges(state)]
        if len(labels) != len(set(labels)):
            raise AutomatonError(u'Cannot minimize: state %d has two edges with the same label' % state)

    names = automaton.weight_names
    blocks = [0] * automaton.states
    count = 1
    while True:
        signatures = {}
        refined = []
        for state in range(automaton.states):
            signature = (blocks[state], tuple(sorted(
                (automaton.position(e.label), tuple(e.weights[name] for name in names), blocks[e.target])
                for e in automaton.out_edges(state))))
            refined.append(signatures.setdefault(signature, len(signatures)))
        blocks = refined
        if len(signatures) == count:
            break
        count = len(signatures)

    transitions = {}
    for edge in automaton.edges:
        entry = (automaton.position(edge.label), edge.label, blocks[edge.target], edge.weights)
        if entry not in transitions.setdefault(blocks[edge.source], []):
            transitions[blocks[edge.source]].append(entry)
    numbering = _canonical(blocks[automaton.initial], transitions)
    edges = [(numbering[source], numbering[target], label, weights)
             for source, entries in transitions.items() if source in numbering
             for _, label, target, weights in entries]
    return GeodesicAutomaton(len(numbering), 0, automaton.alphabet, edges, automaton.meta)


def label_weighted(automaton, oracle, names):
    """
    Copy of an automaton carrying, for each target metric, the weight |label|_target
    on every edge. Path sums then bound target lengths from above only.
    """
    lengths = dict((name, dict((label, oracle.metric_length(label, name)) for label in automaton.alphabet))
                   for name in names)
    edges = []
    for edge in automaton.edges:
        weights = dict(edge.weights)
        weights.update((name, lengths[name][edge.label]) for name in names)
        edges.append((edge.source, edge.target, edge.label, weights))
    return GeodesicAutomaton(automaton.states, automaton.initial, automaton.alphabet, edges,
                             dict(automaton.meta, weighting=LABELS))


def build_cone_automaton(oracle, targets, radius, depth=None, weighting=INCREMENTS):
    """
    Automaton whose states are the radius-k cone types of the shortlex
    geodesic tree, refined by target-length increments, minimized and then
    certified against the oracle. With weighting='labels' the cone types are
    not refined and every edge weighs the target length of its label.
    """
    depth = oracle.horizon if depth is None else depth
    if weighting not in WEIGHTINGS:
        raise AutomatonError(u'Unknown weighting %s (one of %s)' % (weighting, u', '.join(WEIGHTINGS)))
    if depth > oracle.horizon:
        raise HorizonExceeded(u'Depth %d exceeds the oracle horizon %d' % (depth, oracle.horizon))
    if radius < 1 or depth < radius + 2:
        raise ConeTypeError(u'Need depth >= cone radius + 2 (depth %d, radius %d)' % (depth, radius))
    registered = []
    for target in targets:
        if not isinstance(target, str):
            oracle.register(target)
            target = target.name
        registered.append(target)
    names = registered if weighting == INCREMENTS else []

    table = oracle.table
    labels = oracle.base.labels
    size = table.size(depth)
    inner = table.size(depth - 1)
    parent = np.array(table.parent[:size], dtype=np.int64)
    label = np.array(table.label[:size], dtype=np.int64)
    successors = table.successors()[:inner]
    lengths = np.stack([oracle.lengths(name) for name in names], axis=1) if names else np.zeros((size, 0), int)
    increments = lengths[:size].copy()
    increments[1:] -= lengths[parent[1:]]

    children = [[] for _ in range(inner)]
    positions = np.arange(inner)
    for j in range(len(labels)):
        child = successors[:, j]
        tree = (child >= 0) & (child < size)
        tree[tree] &= (parent[child[tree]] == positions[tree]) & (label[child[tree]] == j)
        for x in np.nonzero(tree)[0]:
            children[x].append((j, int(child[x])))
    profile = [tuple(int(value) for value in row) for row in increments]

    signature = [0] * size
    for level in range(1, radius + 1):
        interned = {}
        bound = table.size(depth - level)
        signature = [interned.setdefault(tuple((j, profile[y], signature[y]) for j, y in children[x]), len(interned))
                     for x in range(bound)]
    classes = signature

    transitions = {}
    representative = {}
    for x in range(table.size(depth - radius - 1)):
        source = classes[x]
        representative.setdefault(source, x)
        for j, y in children[x]:
            entry = (j, labels[j], classes[y], profile[y])
            known = transitions.setdefault(source, {}).setdefault(j, (entry, y))
            if known[0] != entry:
                raise ConeTypeError(u'Increment or cone inconsistency at radius %d: "%s" and "%s" share a cone type '
                                    u'but "%s" and "%s" differ' % (radius, table.word(representative[source]),
                                                                   table.word(x), table.word(known[1]),
                                                                   table.word(y)))
    for x in range(table.size(depth - radius)):
        expected = set(j for j, _ in children[x])
        if set(transitions.get(classes[x], {})) != expected:
            raise ConeTypeError(u'Cone type of "%s" first appears at the horizon; raise the depth' % table.word(x))

    grouped = dict((source, [entry for entry, _ in by_label.values()]) for source, by_label in transitions.items())
    numbering = _canonical(classes[0], grouped)
    edges = [(numbering[source], numbering[target], symbol, dict(zip(names, weights)))
             for source, entries in grouped.items() if source in numbering
             for _, symbol, target, weights in entries]
    automaton = GeodesicAutomaton(len(numbering), 0, labels, edges, {
        'base': oracle.base.name, 'source': u'cone types of radius %d' % radius})
    automaton = minimize(automaton)
    report = certify(automaton, oracle, dict((name, name) for name in names), depth)
    if weighting == LABELS:
        automaton = label_weighted(automaton, oracle, registered)
    logger.info(u'Cone automaton radius %d: %d states, %d edges, %s', radius, automaton.states,
                len(automaton.edges), report)
    return automaton.with_meta(depth=depth, weighting=weighting), report


def minimal_cone_automaton(oracle, targets, depth=None, max_radius=6, weighting=INCREMENTS):
    depth = oracle.horizon if depth is None else depth
    failures = []
    for radius in range(1, min(max_radius, depth - 2) + 1):
        try:
            automaton, report = build_cone_automaton(oracle, targets, radius, depth, weighting)
        except ConeTypeError as e:
            logger.info(u'Cone radius %d rejected: %s', radius, e)
            failures.append(str(e))
            continue
        if report.ok:
            return automaton, report
        failures.append(str(report))
    raise ConeTypeError(u'No cone radius up to %d passes certification at depth %d: %s' % (
        max_radius, depth, failures[-1] if failures else u'depth too small'))


class AutomatonError(ManhattanError):
    pass


class ConeTypeError(AutomatonError):
    pass


class CertificationError(AutomatonError):
    pass
