import logging
from bisect import bisect_right
from collections import namedtuple, OrderedDict
from fractions import Fraction
from math import ceil

import click_log
import numpy as np

from manhattan.group import Alphabet, ManhattanError, RewritingSystem, check_confluence

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

DEFAULT_MAX_ELEMENTS = 10 ** 7
GENERATOR_SEARCH_RADIUS = 16
UNREACHED = np.iinfo(np.int64).max // 4

TranslationEstimate = namedtuple('TranslationEstimate', 'upper point_estimate gromov_estimate')


class MetricContext(object):
    """
    Word metric on a group: ordered labels, each spelled over the presentation
    letters. The label order is the shortlex order of the geodesic words.
    """

    def __init__(self, group, name, generators, spellings=None, rules=None):
        self.group = group
        self.name = name
        self.words = OrderedDict(generators)
        self.labels = tuple(self.words)
        for label, word in self.words.items():
            if not word:
                raise MetricError(u'Label %s of metric %s spells the empty word' % (label, name))
            group.alphabet.validate(word)

        keys = OrderedDict((label, group.key(word)) for label, word in self.words.items())
        if group.key(u'') in keys.values():
            raise MetricError(u'Metric %s contains the identity' % name)
        self.inverse = {}
        for label, word in self.words.items():
            inverse_key = group.key(group.invert(word))
            matches = [other for other, key in keys.items() if key == inverse_key]
            if not matches:
                raise MetricError(u'Metric %s is not inverse-closed: no inverse for %s' % (name, label))
            self.inverse[label] = matches[0]
        self.label_keys = keys

        self.spellings = dict(spellings or {})
        self.rules = None
        if rules:
            self.rules = RewritingSystem(Alphabet(self.labels, self.inverse), rules)
            result = check_confluence(self.rules)
            if not result.confluent:
                raise MetricError(u'Geodesic rules of metric %s are not confluent: %s -> %s' % (
                    name, result.witness, u', '.join(result.descendants)))

    def __repr__(self):
        return u'<MetricContext %s {%s}>' % (self.name, u','.join(self.labels))

    def spell(self, labels):
        return u''.join(self.words[label] for label in labels)

    def to_labels(self, word):
        """Rewrite a presentation word letter by letter into this metric's labels."""
        result = []
        for letter in word:
            if letter in self.spellings:
                result.append(self.spellings[letter])
            elif self.words.get(letter) == letter:
                result.append(letter)
            else:
                raise MetricError(u'Metric %s has no spelling for letter %s' % (self.name, letter))
        return u''.join(result)

    def reduced_length(self, word):
        return len(self.rules.normalize(self.to_labels(word)))


class BallTable(object):
    """
    Breadth-first enumeration of the Cayley graph of one metric.

    Parents are expanded in shortlex order and labels in metric order, so the
    first discovery of an element records its shortlex-least geodesic. Layer n
    occupies indices offsets[n] up to offsets[n + 1].
    """

    def __init__(self, context, max_elements=DEFAULT_MAX_ELEMENTS):
        self.context = context
        self.max_elements = max_elements
        self._engine = context.group.engine
        self._steps = [context.words[label] for label in context.labels]
        identity = self._engine.identity()
        self._index = {identity: 0}
        self.keys = [identity]
        self.parent = [-1]
        self.label = [-1]
        self.offsets = [0, 1]
        self._successors = []
        self._successor_cache = None

    def __len__(self):
        return len(self.keys)

    @property
    def radius(self):
        return len(self.offsets) - 2

    def size(self, radius):
        return self.offsets[radius + 1]

    def layer(self, n):
        return range(self.offsets[n], self.offsets[n + 1])

    def grow(self, radius):
        while self.radius < radius:
            self._expand()

    def _expand(self):
        n = self.radius
        start, stop = self.offsets[n], self.offsets[n + 1]
        parents = self.keys[start:stop]
        products = [self._engine.multiply(parents, step) for step in self._steps]
        successors = np.full((stop - start, len(self._steps)), -1, dtype=np.int64)
        index = self._index
        for i in range(stop - start):
            for j, column in enumerate(products):
                key = column[i]
                found = index.get(key)
                if found is None:
                    found = len(self.keys)
                    index[key] = found
                    self.keys.append(key)
                    self.parent.append(start + i)
                    self.label.append(j)
                successors[i, j] = found
        self._successors.append(successors)
        self._successor_cache = None
        self.offsets.append(len(self.keys))
        logger.debug(u'%s: sphere %d has %d elements', self.context.name, n + 1, self.offsets[-1] - stop)
        if len(self.keys) > self.max_elements:
            raise HorizonExceeded(u'Ball of metric %s exceeds %d elements at radius %d' % (
                self.context.name, self.max_elements, n + 1))

    def index(self, key):
        return self._index.get(key)

    def length(self, index):
        return bisect_right(self.offsets, index) - 1

    def lengths(self, radius):
        counts = np.diff(self.offsets[:radius + 2])
        return np.repeat(np.arange(radius + 1, dtype=np.int64), counts)

    def word(self, index):
        labels = []
        while index > 0:
            labels.append(self.context.labels[self.label[index]])
            index = self.parent[index]
        return u''.join(reversed(labels))

    def successors(self):
        """Successor indices (one column per label) for every element inside the expanded radius."""
        if self._successor_cache is None:
            self._successor_cache = np.vstack(self._successors) if self._successors else np.zeros(
                (0, len(self._steps)), dtype=np.int64)
        return self._successor_cache


class CayleyOracle(object):
    """
    Exact lengths for the base metric and every registered target metric on
    the base ball of radius horizon.
    """

    def __init__(self, base, targets=(), horizon=10, max_elements=DEFAULT_MAX_ELEMENTS):
        if horizon < 0:
            raise HorizonExceeded(u'Horizon must be non-negative')
        self.base = base
        self.group = base.group
        self.horizon = horizon
        self.table = BallTable(base, max_elements)
        self.table.grow(horizon)
        self.metrics = OrderedDict([(base.name, base)])
        self._lengths = {base.name: self.table.lengths(horizon)}
        logger.info(u'Enumerated %d elements of %s up to radius %d', self.count, base.name, horizon)
        for target in targets:
            self.register(target)

    @property
    def count(self):
        return self.table.size(self.horizon)

    def lengths(self, metric_name=None):
        name = metric_name or self.base.name
        if name not in self._lengths:
            raise MetricError(u'Metric %s is not registered' % name)
        return self._lengths[name]

    def register(self, metric):
        if metric.name in self._lengths:
            return self._lengths[metric.name]
        if metric.group is not self.group:
            raise MetricError(u'Metric %s belongs to another group' % metric.name)
        if metric.rules is not None:
            strategy, lengths = u'reduction', self._reduction_lengths(metric)
        elif all(key in self.base.label_keys.values() for key in metric.label_keys.values()):
            strategy, lengths = u'relaxation', self._relaxation_lengths(metric)
        else:
            strategy, lengths = u'breadth-first', self._breadth_first_lengths(metric)
        logger.info(u'Registered %s lengths on B(%d) by %s', metric.name, self.horizon, strategy)
        self.metrics[metric.name] = metric
        self._lengths[metric.name] = lengths
        return lengths

    def _reduction_lengths(self, metric):
        lengths = np.zeros(self.count, dtype=np.int64)
        steps = [metric.to_labels(self.base.words[label]) for label in self.base.labels]
        normalize = metric.rules.normalize
        previous = {0: u''}
        for n in range(1, self.horizon + 1):
            current = {}
            for index in self.table.layer(n):
                form = normalize(previous[self.table.parent[index]] + steps[self.table.label[index]])
                current[index] = form
                lengths[index] = len(form)
            previous = current
        return lengths

    def _generator_length(self, metric, label):
        key = self.base.label_keys[label]
        if key in metric.label_keys.values():
            return 1
        table = BallTable(metric, self.table.max_elements)
        for radius in range(1, GENERATOR_SEARCH_RADIUS + 1):
            table.grow(radius)
            if table.index(key) is not None:
                return table.length(table.index(key))
        raise HorizonExceeded(u'Generator %s not found within radius %d of %s' % (
            label, GENERATOR_SEARCH_RADIUS, metric.name))

    def _relaxation_lengths(self, metric):
        """
        Shortest paths over the base ball B(M) with edge weights |s|_target.
        A path leaving B(M) costs at least w_min * (2M + 2 - |x|), so smaller
        distances are exact.
        """
        weights = np.array([self._generator_length(metric, label) for label in self.base.labels], dtype=np.int64)
        smallest = int(weights.min())
        base_lengths = self.lengths()
        radius = self.horizon
        while True:
            self.table.grow(radius + 1)
            size = self.table.size(radius)
            distance = _bucket_shortest_paths(self.table.successors()[:size], weights, size)
            inner = distance[:self.count]
            bound = smallest * (2 * radius + 2 - base_lengths)
            uncertified = inner > bound
            if not uncertified.any():
                return inner.copy()
            needed = (inner[uncertified] / float(smallest) + base_lengths[uncertified] - 2) / 2.0
            logger.debug(u'%d lengths of %s uncertified at radius %d', int(uncertified.sum()), metric.name, radius)
            radius = max(radius + 1, int(ceil(needed.max())))

    def _breadth_first_lengths(self, metric):
        table = BallTable(metric, self.table.max_elements)
        lengths = np.full(self.count, -1, dtype=np.int64)
        missing = list(range(self.count))
        radius = 0
        while missing:
            table.grow(radius)
            pending = []
            for index in missing:
                found = table.index(self.table.keys[index])
                if found is None:
                    pending.append(index)
                else:
                    lengths[index] = table.length(found)
            missing = pending
            if missing and radius and not len(table.layer(radius)):
                raise HorizonExceeded(u'Metric %s does not reach B(%d)' % (metric.name, self.horizon))
            radius += 1
        return lengths

    def spell(self, word):
        """Presentation word for a word over presentation letters and metric labels."""
        letters = self.group.alphabet
        result = []
        for symbol in word:
            if symbol in letters:
                result.append(symbol)
                continue
            for metric in self.metrics.values():
                if symbol in metric.words:
                    result.append(metric.words[symbol])
                    break
            else:
                raise MetricError(u'Unknown symbol "%s" in word "%s"' % (symbol, word))
        return u''.join(result)

    def element(self, word):
        index = self.table.index(self.group.key(self.spell(word)))
        if index is None or index >= self.count:
            raise HorizonExceeded(u'Element %s lies outside the horizon %d' % (word or u'-', self.horizon))
        return index

    def sphere(self, n):
        self._check_radius(n)
        return [self.table.word(index) for index in self.table.layer(n)]

    def ball_size(self, r):
        self._check_radius(r)
        return self.table.size(r)

    def metric_length(self, word, metric_name=None):
        return int(self.lengths(metric_name)[self.element(word)])

    def gromov_product(self, x, y, metric_name=None):
        between = self.group.invert(self.spell(x)) + self.spell(y)
        return Fraction(self.metric_length(x, metric_name) + self.metric_length(y, metric_name) -
                        self.metric_length(between, metric_name), 2)

    def translation_length_estimate(self, word, n, metric_name=None):
        if n < 1:
            raise HorizonExceeded(u'Translation estimate needs at least one power')
        spelled = self.spell(word)
        lengths = [self.metric_length(spelled * power, metric_name) for power in range(1, n + 1)]
        upper = min(Fraction(length, power) for power, length in enumerate(lengths, 1))
        square = self.metric_length(spelled * 2, metric_name)
        return TranslationEstimate(upper, Fraction(lengths[-1], n), square - lengths[0])

    def log_sphere_sum(self, metric_name, a, n):
        self._check_radius(n)
        layer = self.table.layer(n)
        values = -a * self.lengths(metric_name)[layer.start:layer.stop].astype(float)
        return float(np.logaddexp.reduce(values))

    def sphere_sum(self, metric_name, a, n):
        return float(np.exp(self.log_sphere_sum(metric_name, a, n)))

    def ball_average_distortion(self, metric_name, r):
        """Exact mean of d_target(o, x) / r over the base ball of radius r; zero when r is zero."""
        self._check_radius(r)
        if r == 0:
            return Fraction(0)
        size = self.table.size(r)
        return Fraction(int(self.lengths(metric_name)[:size].sum()), r * size)

    def _check_radius(self, n):
        if n < 0 or n > self.horizon:
            raise HorizonExceeded(u'Radius %d outside the horizon %d' % (n, self.horizon))


def _bucket_shortest_paths(successors, weights, size):
    """Dial's algorithm on the ball graph with positive integer label weights."""
    distance = np.full(size, UNREACHED, dtype=np.int64)
    distance[0] = 0
    inside = (successors >= 0) & (successors < size)
    current = 0
    while True:
        frontier = np.nonzero(distance == current)[0]
        if len(frontier):
            for j, weight in enumerate(weights):
                sources = frontier[inside[frontier, j]]
                np.minimum.at(distance, successors[sources, j], current + weight)
        remaining = distance[distance > current]
        if not len(remaining) or remaining.min() >= UNREACHED:
            return distance
        current = int(remaining.min())


class MetricError(ManhattanError):
    pass


class HorizonExceeded(ManhattanError):
    pass
