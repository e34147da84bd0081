"""
Faithful reflection representation of hyperbolic triangle groups.

The rotation subgroup of the Coxeter group with Coxeter matrix entries
(l, m, n) is generated by x = s1 s2, y = s2 s3, z = s3 s1 and satisfies
x^l = y^m = z^n = xyz = 1. Entries of the geometric representation lie in
Z[sqrt(D)], so group elements are stored exactly as integer pairs (P, Q)
meaning P + Q sqrt(D).
"""
import logging

import click_log
import numpy as np

from manhattan.group import PresentationError
from manhattan.cayley import HorizonExceeded

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

# 2 cos(pi / m) as (rational part, coefficient of sqrt(D), D)
TWICE_COSINE = {
    2: (0, 0, None),
    3: (1, 0, None),
    4: (0, 1, 2),
    6: (0, 1, 3),
}
ENTRY_LIMIT = 2 ** 50


def _field(orders):
    for order in orders:
        if order not in TWICE_COSINE:
            raise PresentationError(u'Unsupported triangle order %d (use 2, 3, 4 or 6)' % order)
    radicands = set(TWICE_COSINE[order][2] for order in orders) - set([None])
    if len(radicands) > 1:
        raise PresentationError(u'Orders %s need more than one quadratic field' % (orders,))
    return radicands.pop() if radicands else 2


def reflections(orders):
    """Reflection matrices s1, s2, s3 as stacked (P, Q) integer arrays."""
    l, m, n = orders
    coxeter = {(0, 1): l, (1, 2): m, (0, 2): n}
    matrices = []
    for i in range(3):
        rational = np.eye(3, dtype=np.int64)
        radical = np.zeros((3, 3), dtype=np.int64)
        rational[i, i] = -1
        for j in range(3):
            if i != j:
                p, q, _ = TWICE_COSINE[coxeter[tuple(sorted((i, j)))]]
                rational[i, j] = p
                radical[i, j] = q
        matrices.append(np.stack([rational, radical]))
    return matrices


def multiply(first, second, radicand):
    """Product of (..., 2, 3, 3) arrays over Z[sqrt(radicand)]."""
    p1, q1 = first[..., 0, :, :], first[..., 1, :, :]
    p2, q2 = second[..., 0, :, :], second[..., 1, :, :]
    rational = np.matmul(p1, p2) + radicand * np.matmul(q1, q2)
    radical = np.matmul(p1, q2) + np.matmul(q1, p2)
    return np.stack([rational, radical], axis=-3)


class ReflectionWordProblem(object):
    """
    Word problem for a triangle group presentation through the reflection
    representation. The first three generators of the presentation map to
    x, y, z; their inverse letters map to the inverse rotations.
    """

    def __init__(self, presentation, orders):
        self.presentation = presentation
        self.orders = tuple(orders)
        self.radicand = _field(self.orders)
        self.alphabet = alphabet = presentation.alphabet
        s1, s2, s3 = reflections(self.orders)

        generators = [letter for letter in alphabet if alphabet.position(letter) <= alphabet.position(
            alphabet.inverse[letter])]
        if len(generators) < 3:
            raise PresentationError(u'Triangle representation needs three generators')
        rotations = [(s1, s2), (s2, s3), (s3, s1)]

        self._letters = {}
        for letter, (left, right) in zip(generators[:3], rotations):
            self._letters[letter] = multiply(left, right, self.radicand)
            self._letters[alphabet.inverse[letter]] = multiply(right, left, self.radicand)
        unknown = [letter for letter in alphabet if letter not in self._letters]
        if unknown:
            raise PresentationError(u'Letters without a representation: %s' % u' '.join(unknown))

        self._identity = np.stack([np.eye(3, dtype=np.int64), np.zeros((3, 3), dtype=np.int64)])
        for relator in presentation.relators:
            if self.key(relator) != self.identity():
                raise PresentationError(u'Relator %s is not trivial in the (%d,%d,%d) representation' % (
                    (relator,) + self.orders))
        logger.debug(u'Reflection representation over Z[sqrt(%d)] for orders %s', self.radicand, self.orders)

    def _encode(self, matrix):
        return matrix.astype(np.int64).tobytes()

    def _decode(self, keys):
        return np.frombuffer(b''.join(keys), dtype=np.int64).reshape(len(keys), 2, 3, 3)

    def matrix(self, word):
        current = self._identity
        for letter in word:
            current = multiply(current, self._letters[letter], self.radicand)
        return current

    def identity(self):
        return self._encode(self._identity)

    def key(self, word):
        return self._encode(self.matrix(word))

    def inverse(self, word):
        return self.key(self.alphabet.invert(word))

    def multiply(self, keys, word):
        if not keys:
            return []
        current = self._decode(keys)
        for letter in word:
            current = multiply(current, self._letters[letter], self.radicand)
        if np.abs(current).max() > ENTRY_LIMIT:
            raise HorizonExceeded(u'Matrix entries exceed the exact integer range')
        return [row.tobytes() for row in current.reshape(len(keys), -1)]
