"""
Group fixtures: a directory holding group.txt and optional <base>.json automata.

group.txt is a presentation (see manhattan.group.parse_presentation) plus:

\b
metric <name> <label> ...     labels of a word metric, in shortlex order
label <name> <word>           a label spelled over presentation letters
spell <metric> <letter> <word>  spelling of a letter over a metric's labels
mrule <metric> <lhs> <rhs>    geodesic rewriting rule over a metric's labels
triangle <l> <m> <n>          solve the word problem in the reflection representation
"""
import hashlib
import logging
import os
from collections import OrderedDict
from os import path

import click_log

from manhattan.group import (EMPTY_WORD, Group, ManhattanError, RewritingWordProblem, check_confluence,
                             parse_presentation)
from manhattan.representation import ReflectionWordProblem
from manhattan.cayley import DEFAULT_MAX_ELEMENTS, CayleyOracle, MetricContext
from manhattan.automaton import load_automaton

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

FIXTURE_DIR_VARIABLE = 'MANHATTAN_FIXTURE_DIR'
PACKAGED_FIXTURES = path.join(path.dirname(path.abspath(__file__)), 'fixtures')
GROUP_FILE = 'group.txt'
EXTRA_DIRECTIVES = ('metric', 'label', 'spell', 'mrule', 'triangle')


def search_path():
    configured = os.environ.get(FIXTURE_DIR_VARIABLE, '')
    return [entry for entry in configured.split(os.pathsep) if entry] + [PACKAGED_FIXTURES]


def find_fixture(name):
    if path.isfile(path.join(name, GROUP_FILE)):
        return path.abspath(name)
    for directory in search_path():
        candidate = path.join(directory, name)
        if path.isfile(path.join(candidate, GROUP_FILE)):
            return candidate
    raise FixtureError(u'Fixture "%s" not found in %s' % (name, os.pathsep.join(search_path())))


class MetricSpec(object):
    def __init__(self, name, labels):
        self.name = name
        self.labels = list(labels)
        self.spellings = {}
        self.rules = []


class Fixture(object):
    def __init__(self, name):
        self.directory = find_fixture(name)
        self.name = path.basename(self.directory.rstrip(os.sep))
        with open(path.join(self.directory, GROUP_FILE)) as f:
            self.text = f.read()

        self.metric_specs = OrderedDict()
        self.label_words = {}
        self.triangle = None
        presentation_lines = []
        for number, line in enumerate(self.text.splitlines(), 1):
            parts = line.split('#', 1)[0].split()
            if parts and parts[0] in EXTRA_DIRECTIVES:
                self._directive(number, parts[0], parts[1:])
                presentation_lines.append(u'')
            else:
                presentation_lines.append(line)
        self.presentation = parse_presentation(u'\n'.join(presentation_lines))
        self._group = None
        self._metrics = {}
        logger.debug(u'Loaded fixture %s from %s', self.name, self.directory)

    def _directive(self, number, keyword, arguments):
        expected = {'metric': None, 'label': 2, 'spell': 3, 'mrule': 3, 'triangle': 3}[keyword]
        if expected is not None and len(arguments) != expected or expected is None and len(arguments) < 2:
            raise FixtureError(u'line %d: malformed %s directive' % (number, keyword))
        if keyword == 'metric':
            self.metric_specs[arguments[0]] = MetricSpec(arguments[0], arguments[1:])
        elif keyword == 'label':
            self.label_words[arguments[0]] = arguments[1]
        elif keyword == 'triangle':
            try:
                self.triangle = tuple(int(value) for value in arguments)
            except ValueError:
                raise FixtureError(u'line %d: triangle orders must be integers' % number)
        else:
            metric = self.metric_specs.get(arguments[0])
            if metric is None:
                raise FixtureError(u'line %d: metric %s is not declared yet' % (number, arguments[0]))
            if keyword == 'spell':
                metric.spellings[arguments[1]] = arguments[2]
            else:
                metric.rules.append(tuple(u'' if side == EMPTY_WORD else side for side in arguments[1:]))

    def __repr__(self):
        return u'<Fixture %s>' % self.name

    @property
    def group(self):
        if self._group is None:
            if self.presentation.rules is not None:
                result = check_confluence(self.presentation.rules)
                if not result.confluent:
                    raise FixtureError(u'Rewriting system of %s is not confluent at %s' % (self.name, result.witness))
                engine = RewritingWordProblem(self.presentation.rules)
            elif self.triangle is not None:
                engine = ReflectionWordProblem(self.presentation, self.triangle)
            else:
                raise FixtureError(u'Fixture %s has neither rewriting rules nor a triangle representation' % self.name)
            self._group = Group(self.presentation, engine)
        return self._group

    @property
    def metric_names(self):
        return list(self.metric_specs)

    def metric(self, name):
        if name not in self._metrics:
            spec = self.metric_specs.get(name)
            if spec is None:
                raise FixtureError(u'Fixture %s has no metric %s (has %s)' % (
                    self.name, name, u', '.join(self.metric_specs) or u'none'))
            generators = OrderedDict((label, self.label_words.get(label, label)) for label in spec.labels)
            self._metrics[name] = MetricContext(self.group, name, generators, spec.spellings, spec.rules)
        return self._metrics[name]

    def oracle(self, base, targets=(), horizon=10, max_elements=DEFAULT_MAX_ELEMENTS):
        return CayleyOracle(self.metric(base), [self.metric(name) for name in targets], horizon, max_elements)

    def automaton_path(self, base):
        return path.join(self.directory, u'%s.json' % base)

    def automaton(self, base):
        """The shipped automaton for a base metric, or None."""
        location = self.automaton_path(base)
        if not path.isfile(location):
            return None
        return load_automaton(location).with_meta(group=self.name, base=base)

    def digest(self):
        digest = hashlib.sha256()
        for filename in sorted(os.listdir(self.directory)):
            if filename == GROUP_FILE or filename.endswith('.json'):
                with open(path.join(self.directory, filename), 'rb') as f:
                    digest.update(filename.encode('utf-8'))
                    digest.update(f.read())
        return digest.hexdigest()


def load_fixture(name):
    return Fixture(name)


class FixtureError(ManhattanError):
    pass
