import re
import logging
from collections import namedtuple, OrderedDict

import click_log

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

EMPTY_WORD = '-'
RELATOR_TOKEN = re.compile(r'([A-Za-z])(\d*)')

Rule = namedtuple('Rule', 'lhs rhs')
ConfluenceResult = namedtuple('ConfluenceResult', 'confluent witness descendants')


class Alphabet(object):
    def __init__(self, letters, inverse):
        self.letters = tuple(letters)
        self.inverse = dict(inverse)
        self._position = dict((letter, i) for i, letter in enumerate(self.letters))

        if len(self._position) != len(self.letters):
            raise PresentationError(u'Duplicate letter in alphabet: %s' % u' '.join(self.letters))

        for letter in self.letters:
            if letter not in self.inverse:
                raise PresentationError(u'Letter without inverse: %s' % letter)
            if self.inverse[letter] not in self._position:
                raise PresentationError(u'Inverse of %s is not a letter: %s' % (letter, self.inverse[letter]))
            if self.inverse[self.inverse[letter]] != letter:
                raise PresentationError(u'inverse not involutive: %s -> %s -> %s' % (
                    letter, self.inverse[letter], self.inverse[self.inverse[letter]]))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __contains__(self, letter):
        return letter in self._position

    def position(self, letter):
        return self._position[letter]

    def invert(self, word):
        return u''.join(self.inverse[letter] for letter in reversed(word))

    def validate(self, word):
        for letter in word:
            if letter not in self._position:
                raise PresentationError(u'Unknown letter "%s" in word "%s"' % (letter, word))
        return word

    def shortlex_key(self, word):
        return len(word), tuple(self._position[letter] for letter in word)


class Presentation(object):
    def __init__(self, alphabet, relators, rules=None):
        self.alphabet = alphabet
        self.relators = tuple(relators)
        for relator in self.relators:
            if not relator:
                raise PresentationError(u'Empty relator')
            alphabet.validate(relator)
        self.rules = RewritingSystem(alphabet, rules) if rules else None

    @property
    def letters(self):
        return self.alphabet.letters

    def __repr__(self):
        return u'<Presentation %s | %s>' % (u','.join(self.letters), u','.join(self.relators) or u'-')


class RewritingSystem(object):
    """
    Shortlex-decreasing string rewriting system over an alphabet.

    Normal forms are computed leftmost-innermost: letters are pushed onto an
    irreducible stack and the first rule whose left-hand side ends at the top
    of the stack is applied.
    """

    def __init__(self, alphabet, rules):
        self.alphabet = alphabet
        self.rules = tuple(Rule(lhs, rhs) for lhs, rhs in rules)
        self._by_last = {}
        for rule in self.rules:
            if not rule.lhs:
                raise PresentationError(u'Rule with empty left-hand side')
            alphabet.validate(rule.lhs)
            alphabet.validate(rule.rhs)
            if alphabet.shortlex_key(rule.rhs) >= alphabet.shortlex_key(rule.lhs):
                raise PresentationError(u'Rule %s -> %s does not decrease shortlex order' % (
                    rule.lhs, rule.rhs or EMPTY_WORD))
            self._by_last.setdefault(rule.lhs[-1], []).append(rule)

    def __len__(self):
        return len(self.rules)

    def normalize(self, word):
        stack = []
        pending = list(reversed(word))
        while pending:
            stack.append(pending.pop())
            for lhs, rhs in self._by_last.get(stack[-1], ()):
                size = len(lhs)
                if len(stack) >= size and u''.join(stack[-size:]) == lhs:
                    del stack[-size:]
                    pending.extend(reversed(rhs))
                    break
        return u''.join(stack)

    def is_irreducible(self, word):
        return not any(rule.lhs in word for rule in self.rules)

    def rewrites(self, word):
        """All words reachable from word by a single rule application."""
        for lhs, rhs in self.rules:
            start = word.find(lhs)
            while start >= 0:
                yield word[:start] + rhs + word[start + len(lhs):]
                start = word.find(lhs, start + 1)

    def descendants(self, word, budget):
        seen = set([word])
        frontier = [word]
        irreducible = []
        while frontier:
            current = frontier.pop()
            children = list(self.rewrites(current))
            if not children:
                irreducible.append(current)
            for child in children:
                if child not in seen:
                    if len(seen) >= budget:
                        raise PresentationError(u'Rewriting budget of %d words exhausted at "%s"' % (budget, word))
                    seen.add(child)
                    frontier.append(child)
        return sorted(irreducible, key=self.alphabet.shortlex_key, reverse=True)

    def critical_words(self):
        """Overlap words of every ordered pair of rules, in rule order."""
        for first in self.rules:
            for second in self.rules:
                if first is not second and second.lhs in first.lhs:
                    yield first.lhs
                for size in range(1, min(len(first.lhs), len(second.lhs))):
                    if first.lhs[-size:] == second.lhs[:size]:
                        yield first.lhs + second.lhs[size:]


def normalize(word, rws):
    return rws.normalize(word)


def check_confluence(rws, oracle_depth=10000):
    """
    Resolve every critical pair by exhaustive rewriting.

    Returns a ConfluenceResult; when the system is not confluent the witness is
    the first overlap word with more than one irreducible descendant.
    """
    checked = set()
    for word in rws.critical_words():
        if word in checked:
            continue
        checked.add(word)
        descendants = rws.descendants(word, oracle_depth)
        if len(descendants) > 1:
            logger.debug(u'Critical word %s has descendants %s', word, descendants)
            return ConfluenceResult(False, word, tuple(descendants))
    return ConfluenceResult(True, None, ())


class Group(object):
    def __init__(self, presentation, engine):
        self.presentation = presentation
        self.engine = engine

    @property
    def alphabet(self):
        return self.presentation.alphabet

    def key(self, word):
        return self.engine.key(word)

    def equal(self, first, second):
        return self.engine.key(first) == self.engine.key(second)

    def invert(self, word):
        return self.alphabet.invert(word)


class RewritingWordProblem(object):
    """Word problem solved by a confluent rewriting system; keys are normal forms."""

    def __init__(self, rws):
        self.rws = rws

    def identity(self):
        return u''

    def key(self, word):
        return self.rws.normalize(word)

    def inverse(self, word):
        return self.rws.normalize(self.rws.alphabet.invert(word))

    def multiply(self, keys, word):
        normalize = self.rws.normalize
        return [normalize(key + word) for key in keys]


def _split_items(text):
    for number, line in enumerate(text.splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        for item in line.split(';'):
            item = item.strip()
            if item:
                yield number, item


def _expand_relator(token, number):
    if token in (EMPTY_WORD, u'(none)'):
        return None
    word = []
    position = 0
    for match in RELATOR_TOKEN.finditer(token):
        if match.start() != position:
            raise PresentationError(u'line %d: malformed relator "%s"' % (number, token))
        word.append(match.group(1) * int(match.group(2) or 1))
        position = match.end()
    if position != len(token):
        raise PresentationError(u'line %d: malformed relator "%s"' % (number, token))
    return u''.join(word)


def parse_presentation(text):
    """
    Parse a presentation in the line format or the compact format.

    \b
    gen a            gens a,b
    inv a A          inv a:A,b:B
    rel abC          rel a3,b3,c4,abc
    rule ab c        (rule right-hand side "-" is the empty word)
    """
    generators = []
    inverse = OrderedDict()
    relators = []
    rules = []

    for number, item in _split_items(text):
        parts = item.split()
        keyword, arguments = parts[0], parts[1:]
        if keyword in ('gen', 'gens'):
            for argument in arguments:
                generators.extend(letter for letter in argument.split(',') if letter)
        elif keyword == 'inv':
            if len(arguments) == 2 and ':' not in arguments[0]:
                pairs = [tuple(arguments)]
            else:
                pairs = []
                for argument in u','.join(arguments).split(','):
                    if argument:
                        if argument.count(':') != 1:
                            raise PresentationError(u'line %d: malformed inverse "%s"' % (number, argument))
                        pairs.append(tuple(argument.split(':')))
            for letter, inverse_letter in pairs:
                if letter in inverse and inverse[letter] != inverse_letter:
                    raise PresentationError(u'inverse not involutive: %s has inverses %s and %s' % (
                        letter, inverse[letter], inverse_letter))
                inverse[letter] = inverse_letter
        elif keyword in ('rel', 'rels'):
            for argument in u''.join(arguments).split(','):
                relator = _expand_relator(argument, number)
                if relator:
                    relators.append(relator)
        elif keyword == 'rule':
            if len(arguments) != 2:
                raise PresentationError(u'line %d: rule needs a left and a right side' % number)
            lhs, rhs = arguments
            rules.append((u'' if lhs == EMPTY_WORD else lhs, u'' if rhs == EMPTY_WORD else rhs))
        else:
            raise PresentationError(u'line %d: unknown directive "%s"' % (number, keyword))

    if not generators:
        raise PresentationError(u'Presentation without generators')

    letters = list(generators)
    for letter, inverse_letter in list(inverse.items()):
        for candidate in (letter, inverse_letter):
            if candidate not in letters:
                letters.append(candidate)
    for letter in generators:
        if letter not in inverse and not any(letter == value for value in inverse.values()):
            conventional = letter.swapcase()
            if conventional == letter:
                raise PresentationError(u'No inverse declared for %s' % letter)
            inverse[letter] = conventional
            if conventional not in letters:
                letters.append(conventional)

    completed = dict(inverse)
    for letter, inverse_letter in inverse.items():
        completed.setdefault(inverse_letter, letter)

    for relator in relators:
        for letter in relator:
            if letter not in completed:
                raise PresentationError(u'Relator "%s" uses unknown letter "%s"' % (relator, letter))

    return Presentation(Alphabet(letters, completed), relators, rules)


class ManhattanError(Exception):
    pass


class PresentationError(ManhattanError):
    pass
