"""
Weighted transfer matrices and the Manhattan curve of a geodesic automaton.

For a recurrent component C with edges E and an edge weight w, the transfer
matrix at parameter a is indexed by E with entry(e, e') = exp(-a w(e')) when
e' follows e. theta(a) is the largest log Perron root over components.
"""
import logging
from collections import namedtuple
from fractions import Fraction
from math import exp, log

import click_log
import networkx as nx
import numpy as np

from manhattan.group import ManhattanError
from manhattan.automaton import AutomatonError, analyze_graph

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

DEFAULT_TOLERANCE = 1e-10
ASYMPTOTE_TOLERANCE = 1e-8
TIE_BAND = 1e-9
SPREAD_LIMIT = 1e-6
ROOT_TOLERANCE = 1e-12
INVERSE_SHIFT = 1e-13
RICHARDSON_STEP = 1e-4
BRACKET_LIMIT = 2 ** 20

PerronData = namedtuple('PerronData', 'lambda_ right left residual bracket log_lambda')
ThetaValue = namedtuple('ThetaValue', 'value maximal_components semisimple')
CurveDerivatives = namedtuple('CurveDerivatives', 'theta_prime theta_second cross_component_spread')
GrowthRates = namedtuple('GrowthRates', 'v v_star')
CycleMeanResult = namedtuple('CycleMeanResult', 'value witness')
DilationConstants = namedtuple('DilationConstants', 'alpha_min alpha_max')
AsymptoteGap = namedtuple('AsymptoteGap', 't gap_min gap_max')
SymmetryQuotient = namedtuple('SymmetryQuotient', 'orbits matrix log_lambda quotient_log_lambda')
Reweighting = namedtuple('Reweighting', 'cycle weights critical')


class TransferMatrix(object):
    """
    Edge-indexed transfer matrix, stored scaled by exp(a * reference) so that
    every entry lies in (0, 1] when the reference is the extremal weight in the
    direction of a; shift is the logarithm of the removed factor.
    """

    def __init__(self, follows, weights, a, component=None, reference=None):
        self.component = component
        self.a = a
        self.weights = np.asarray(weights, dtype=float)
        if reference is None:
            reference = self.weights.min() if a >= 0 else self.weights.max()
        self.shift = -a * reference
        self.matrix = follows * np.exp(-a * (self.weights - reference))[np.newaxis, :]

    @classmethod
    def from_component(cls, automaton, component, weight, a):
        return cls(follow_matrix(automaton, component), automaton.weight_vector(weight, component.edges), a, component)

    def __len__(self):
        return self.matrix.shape[0]

    def derivative(self, order):
        """Derivative of the scaled matrix in a, up to the common scale factor."""
        return self.matrix * ((-self.weights) ** order)[np.newaxis, :]


def follow_matrix(automaton, component):
    edges = [automaton.edges[index] for index in component.edges]
    return np.array([[1.0 if first.target == second.source else 0.0 for second in edges] for first in edges])


def _bracket(matrix, vector):
    ratios = matrix.dot(vector) / vector
    return ratios.min(), ratios.max()


def _perron_vector(matrix, seed, estimate, tol, max_iterations):
    # every block of a degenerate root stays positive
    vector = np.abs(np.real(seed))
    vector = vector / vector.max() + 1.0
    identity = np.eye(matrix.shape[0])
    for _ in range(max_iterations):
        low, high = _bracket(matrix, vector)
        if high - low <= 2 * tol * high:
            return vector, (low, high)
        try:
            candidate = np.linalg.solve(estimate * (1 + INVERSE_SHIFT) * identity - matrix, vector)
        except np.linalg.LinAlgError:
            candidate = matrix.dot(vector) + estimate * vector
        vector = np.abs(candidate)
        vector = np.maximum(vector / vector.max(), np.finfo(float).tiny)
    low, high = _bracket(matrix, vector)
    if high - low > 2 * tol * high:
        raise PerronError(u'Perron iteration did not converge: bracket width %.3g at lambda %.6g' % (
            (high - low) / high, high))
    return vector, (low, high)


def perron(transfer, tol=DEFAULT_TOLERANCE, max_iterations=50):
    """
    Dominant eigenpair of an irreducible non-negative matrix.

    A dense eigen-solve seeds shifted inverse iteration, which stops once the
    Collatz-Wielandt bracket min (Mv)_i / v_i <= lambda <= max (Mv)_i / v_i is
    narrower than 2 tol lambda.
    """
    if isinstance(transfer, np.ndarray):
        matrix, shift = transfer, 0.0
    else:
        matrix, shift = transfer.matrix, transfer.shift
    values, vectors = np.linalg.eig(matrix)
    index = int(np.argmax(values.real))
    estimate = float(values[index].real)
    if estimate <= 0:
        raise PerronError(u'Matrix has no positive eigenvalue (is the component irreducible?)')
    right, (low, high) = _perron_vector(matrix, vectors[:, index], estimate, tol, max_iterations)

    values, vectors = np.linalg.eig(matrix.T)
    index = int(np.argmax(values.real))
    left, _ = _perron_vector(matrix.T, vectors[:, index], estimate, tol, max_iterations)
    left = left / left.dot(right)

    value = min(max(estimate, low), high)
    residual = max(np.abs(matrix.dot(right) - value * right).max() / (value * np.abs(right).max()),
                   np.abs(left.dot(matrix) - value * left).max() / (value * np.abs(left).max()))
    scale = exp(shift)
    return PerronData(value * scale, right, left, residual, (low * scale, high * scale), log(value) + shift)


def pressure_component(automaton, component, weight, a, tol=DEFAULT_TOLERANCE):
    return perron(TransferMatrix.from_component(automaton, component, weight, a), tol).log_lambda


def critical_radius(follows, critical):
    """Spectral radius of the follow matrix restricted to the critical edge positions."""
    if not critical:
        return 0.0
    restricted = follows[np.ix_(critical, critical)]
    graph = nx.from_numpy_array(restricted, create_using=nx.DiGraph)
    radius = 0.0
    for scc in nx.strongly_connected_components(graph):
        block = sorted(scc)
        if len(block) == 1 and not restricted[block[0], block[0]]:
            continue
        radius = max(radius, perron(restricted[np.ix_(block, block)]).lambda_)
    return radius


def _potential(edges, mean, negate=False):
    """
    Shortest distances from a virtual source for the costs sign * (w - mean),
    so that sign * (w - mean) + h(source) - h(target) >= 0 on every edge.
    """
    sign = -1 if negate else 1
    distance = dict((state, Fraction(0)) for _, source, target, _ in edges for state in (source, target))
    for _ in range(len(distance)):
        changed = False
        for _, source, target, weight in edges:
            candidate = distance[source] + sign * (weight - mean)
            if candidate < distance[target]:
                distance[target] = candidate
                changed = True
        if not changed:
            break
    return distance


def reweight(automaton, component, weight, direction):
    """
    Weights cohomologous to `weight` on a component with w >= alpha_min edgewise
    (direction 1) or w <= alpha_max edgewise (direction -1). Equality holds on
    every edge of an extremal-mean cycle.
    """
    negate = direction < 0
    sign = -1 if negate else 1
    edges = [(index, automaton.edges[index].source, automaton.edges[index].target,
              automaton.edges[index].weights[weight]) for index in component.edges]
    cycle = _karp(edges, negate)
    potential = _potential(edges, cycle.value, negate)
    shifted = [w + sign * (potential[source] - potential[target]) for _, source, target, w in edges]
    critical = [position for position, value in enumerate(shifted) if value == cycle.value]
    return Reweighting(cycle, np.array([float(value) for value in shifted]), critical)


def _karp(edges, negate=False):
    """
    Minimum mean cycle of a strongly connected multigraph given as
    (index, source, target, weight) tuples, in exact arithmetic.
    """
    sign = -1 if negate else 1
    states = sorted(set(source for _, source, _, _ in edges) | set(target for _, _, target, _ in edges))
    size = len(states)
    position = dict((state, i) for i, state in enumerate(states))
    by_index = dict((index, (position[source], position[target], sign * weight))
                    for index, source, target, weight in edges)

    distance = [[None] * size for _ in range(size + 1)]
    predecessor = [[None] * size for _ in range(size + 1)]
    distance[0][0] = 0
    for k in range(1, size + 1):
        for index, (source, target, weight) in by_index.items():
            previous = distance[k - 1][source]
            if previous is not None and (distance[k][target] is None or previous + weight < distance[k][target]):
                distance[k][target] = previous + weight
                predecessor[k][target] = index

    best, best_state = None, None
    for v in range(size):
        if distance[size][v] is None:
            continue
        worst = max(Fraction(distance[size][v] - distance[k][v], size - k)
                    for k in range(size) if distance[k][v] is not None)
        if best is None or worst < best:
            best, best_state = worst, v

    walk = []
    state = best_state
    for k in range(size, 0, -1):
        index = predecessor[k][state]
        walk.append(index)
        state = by_index[index][0]
    walk.reverse()
    vertices = [by_index[walk[0]][0]] + [by_index[index][1] for index in walk]

    def mean(cycle):
        return Fraction(sum(by_index[index][2] for index in cycle), len(cycle))

    for start in range(len(vertices)):
        for stop in range(start + 1, len(vertices)):
            if vertices[start] == vertices[stop] and mean(walk[start:stop]) == best:
                return CycleMeanResult(sign * best, tuple(walk[start:stop]))

    graph = nx.DiGraph()
    for index, (source, target, weight) in by_index.items():
        if not graph.has_edge(source, target) or weight < graph[source][target]['weight']:
            graph.add_edge(source, target, weight=weight, index=index)
    for cycle in nx.simple_cycles(graph):
        indices = [graph[u][v]['index'] for u, v in zip(cycle, cycle[1:] + cycle[:1])]
        if mean(indices) == best:
            return CycleMeanResult(sign * best, tuple(indices))
    raise ManhattanError(u'No cycle attains the mean %s' % best)


def min_mean_cycle(automaton, component, weight):
    return _karp([(index, automaton.edges[index].source, automaton.edges[index].target,
                   automaton.edges[index].weights[weight]) for index in component.edges])


def max_mean_cycle(automaton, component, weight):
    return _karp([(index, automaton.edges[index].source, automaton.edges[index].target,
                   automaton.edges[index].weights[weight]) for index in component.edges], negate=True)


class ManhattanCurve(object):
    def __init__(self, automaton, weight, analysis=None, tol=DEFAULT_TOLERANCE, strict=True):
        if weight not in automaton.weight_names:
            raise AutomatonError(u'Automaton has no weight %s (has %s)' % (weight, u', '.join(automaton.weight_names)))
        self.automaton = automaton
        self.weight = weight
        self.tol = tol
        self.strict = strict
        self.analysis = analysis or analyze_graph(automaton)
        if not len(self.analysis):
            raise AutomatonError(u'Automaton has no cycles (finite group)')
        self._follows = [follow_matrix(automaton, component) for component in self.analysis]
        self._reweighted = {}
        self._dilation = None

    def __repr__(self):
        return u'<ManhattanCurve base=%s weight=%s>' % (self.base, self.weight)

    @property
    def base(self):
        return self.automaton.meta.get('base')

    @property
    def components(self):
        return self.analysis.components

    def reweighting(self, component, direction):
        key = (component.index, 1 if direction > 0 else -1)
        if key not in self._reweighted:
            self._reweighted[key] = reweight(self.automaton, component, self.weight, key[1])
        return self._reweighted[key]

    def transfer(self, component, a):
        reweighting = self.reweighting(component, 1 if a >= 0 else -1)
        return TransferMatrix(self._follows[component.index], reweighting.weights, a, component,
                              float(reweighting.cycle.value))

    def pressure(self, component, a, tol=None):
        return perron(self.transfer(component, a), tol or self.tol).log_lambda

    def theta(self, a, tol=None):
        pressures = [self.pressure(component, a, tol) for component in self.components]
        value = max(pressures)
        band = TIE_BAND * max(1.0, abs(value))
        maximal = tuple(component for component, pressure in zip(self.components, pressures)
                        if pressure >= value - band)
        semisimple = not any(self.analysis.reaches(first, second)
                             for first in maximal for second in maximal if first is not second)
        if not semisimple and self.strict:
            raise SemisimplicityError(u'Maximal components %s are joined by a path at a=%r' % (
                [component.index for component in maximal], a))
        return ThetaValue(value, maximal, semisimple)

    def _perturbation(self, component, a):
        transfer = self.transfer(component, a)
        data = perron(transfer, self.tol)
        matrix, right, left = transfer.matrix, data.right, data.left
        value = left.dot(matrix.dot(right))
        first, second = transfer.derivative(1), transfer.derivative(2)
        slope = left.dot(first.dot(right))

        size = len(transfer)
        bordered = np.vstack([matrix - value * np.eye(size), left[np.newaxis, :]])
        rhs = np.concatenate([slope * right - first.dot(right), [0.0]])
        vector_slope = np.linalg.lstsq(bordered, rhs, rcond=None)[0]
        curvature = left.dot(second.dot(right)) + 2 * left.dot(first.dot(vector_slope))
        return slope / value, curvature / value - (slope / value) ** 2

    def _richardson(self, component, a):
        step = RICHARDSON_STEP * (1 + abs(a))

        def second_difference(h):
            return (self.pressure(component, a + h) - 2 * self.pressure(component, a) +
                    self.pressure(component, a - h)) / (h * h)

        return (4 * second_difference(step / 2) - second_difference(step)) / 3

    def derivatives(self, a, method='perturbation'):
        """
        theta' from the eigenvalue perturbation identity and theta'' from the
        second order identity, or from Richardson-extrapolated central
        differences of the component pressure with method='richardson'.
        """
        maximal = self.theta(a).maximal_components
        slopes, curvatures = [], []
        for component in maximal:
            slope, curvature = self._perturbation(component, a)
            if method == 'richardson':
                curvature = self._richardson(component, a)
            slopes.append(slope)
            curvatures.append(curvature)
        spread = max(max(slopes) - min(slopes), max(curvatures) - min(curvatures))
        if spread > SPREAD_LIMIT:
            raise SpreadError(u'Maximal components disagree on derivatives at a=%r (spread %.3g)' % (a, spread))
        return CurveDerivatives(slopes[0], curvatures[0], spread)

    def growth_rates(self):
        v = self.theta(0.0).value
        if v <= 0:
            raise BracketError(u'theta(0) = %.6g is not positive; nothing to bracket' % v)
        low, high = 0.0, 1.0
        while self.theta(high).value >= 0:
            low, high = high, 2 * high
            if high > BRACKET_LIMIT:
                raise BracketError(u'No sign change of theta found up to a=%g (invalid weights)' % high)
        while high - low > ROOT_TOLERANCE:
            middle = (low + high) / 2
            if self.theta(middle).value >= 0:
                low = middle
            else:
                high = middle
        return GrowthRates(v, (low + high) / 2)

    def mean_distortion(self):
        return -self.derivatives(0.0).theta_prime

    def dilation_constants(self):
        if self._dilation is None:
            lows = [self.reweighting(component, 1).cycle for component in self.components]
            highs = [self.reweighting(component, -1).cycle for component in self.components]
            self._dilation = DilationConstants(min(lows, key=lambda r: r.value), max(highs, key=lambda r: r.value))
        return self._dilation

    def adjacency_radius(self):
        return exp(max(self.pressure(component, 0.0) for component in self.components))

    def asymptote_gap(self, t):
        dilation = self.dilation_constants()
        value = self.theta(t, tol=max(self.tol, ASYMPTOTE_TOLERANCE)).value
        gap_min = value + float(dilation.alpha_min.value) * t if t >= 0 else None
        gap_max = value + float(dilation.alpha_max.value) * t if t <= 0 else None
        return AsymptoteGap(t, gap_min, gap_max)

    def gap_limit(self, direction):
        """
        Limit of the asymptote gap as t -> +inf (direction 1) or t -> -inf
        (direction -1): the log spectral radius of the critical subgraph.
        """
        dilation = self.dilation_constants()
        extremal = dilation.alpha_min.value if direction > 0 else dilation.alpha_max.value
        radius = 0.0
        for component in self.components:
            reweighting = self.reweighting(component, direction)
            if reweighting.cycle.value == extremal:
                radius = max(radius, critical_radius(self._follows[component.index], reweighting.critical))
        if not radius:
            raise BracketError(u'Critical subgraph in direction %d carries no cycle' % direction)
        return max(log(radius), 0.0)


def symmetry_quotient(curve, label_map, a, component=None):
    """
    Lump the transfer matrix of a component over the edge orbits of a label
    permutation that is an automorphism of the component.
    """
    automaton = curve.automaton
    component = component or curve.theta(a).maximal_components[0]
    by_label = dict(((automaton.edges[index].source, automaton.edges[index].label), index)
                    for index in component.edges)
    states = sorted(component.states)

    permutation = None
    for candidate in states:
        mapping = {states[0]: candidate}
        queue = [states[0]]
        edge_map = {}
        visited = set()
        while queue and mapping is not None:
            state = queue.pop()
            if state in visited:
                continue
            visited.add(state)
            for index in component.edges:
                edge = automaton.edges[index]
                if edge.source != state:
                    continue
                image = by_label.get((mapping[state], label_map.get(edge.label)))
                if image is None or automaton.edges[image].weights != edge.weights:
                    mapping = None
                    break
                target = automaton.edges[image].target
                if mapping.setdefault(edge.target, target) != target:
                    mapping = None
                    break
                edge_map[index] = image
                queue.append(edge.target)
        if mapping is not None and len(edge_map) == len(component.edges) and \
                len(set(mapping.values())) == len(mapping):
            permutation = edge_map
            break
    if permutation is None:
        raise ManhattanError(u'Label map is not an automorphism of component %d' % component.index)

    position = dict((index, i) for i, index in enumerate(component.edges))
    orbits = []
    assigned = set()
    for index in component.edges:
        if index in assigned:
            continue
        orbit = [index]
        while permutation[orbit[-1]] != index:
            orbit.append(permutation[orbit[-1]])
        assigned.update(orbit)
        orbits.append(tuple(orbit))

    transfer = TransferMatrix.from_component(automaton, component, curve.weight, a)
    quotient = np.array([[sum(transfer.matrix[position[first[0]], position[index]] for index in second)
                          for second in orbits] for first in orbits])
    full = perron(transfer, curve.tol).log_lambda
    lumped = perron(quotient, curve.tol).log_lambda + transfer.shift
    return SymmetryQuotient(tuple(orbits), quotient, full, lumped)


class PerronError(ManhattanError):
    pass


class SemisimplicityError(ManhattanError):
    pass


class SpreadError(ManhattanError):
    pass


class BracketError(ManhattanError):
    pass
