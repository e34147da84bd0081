from collections import OrderedDict
from fractions import Fraction
from math import log

import numpy as np
import pytest

from manhattan.cayley import CayleyOracle, HorizonExceeded, MetricContext, MetricError

SPHERE_ONE = [u'a', u'b', u'c', u'A', u'B', u'C']


@pytest.fixture(scope='module')
def small_oracle(free_fixture):
    return free_fixture.oracle('Sstar', ['S'], 4)


@pytest.fixture(scope='module')
def s_base_oracle(free_fixture):
    return free_fixture.oracle('S', ['Sstar'], 4)


def test_sphere_words(small_oracle):
    assert small_oracle.sphere(0) == [u'']
    assert small_oracle.sphere(1) == SPHERE_ONE
    assert small_oracle.sphere(2)[:4] == [u'aa', u'ac', u'aB', u'aC']


@pytest.mark.parametrize('n', [1, 2, 3, 4])
def test_sphere_sizes(small_oracle, n):
    assert len(small_oracle.sphere(n)) == 6 * 4 ** (n - 1)


def test_ball_size(small_oracle):
    assert small_oracle.ball_size(2) == 31
    assert small_oracle.count == 1 + 6 + 24 + 96 + 384


def test_outside_horizon(small_oracle):
    with pytest.raises(HorizonExceeded):
        small_oracle.sphere(5)
    with pytest.raises(HorizonExceeded):
        small_oracle.metric_length(u'aaaaa')


@pytest.mark.parametrize('word, base, target', [
    (u'', 0, 0),
    (u'a', 1, 1),
    (u'c', 1, 2),
    (u'cc', 2, 4),
    (u'Ac', 1, 1),
    (u'aC', 2, 3),
    (u'ab', 1, 2),
])
def test_metric_lengths(small_oracle, word, base, target):
    assert small_oracle.metric_length(word) == base
    assert small_oracle.metric_length(word, 'S') == target


def test_unknown_metric(small_oracle):
    with pytest.raises(MetricError):
        small_oracle.lengths('T')


def test_gromov_product(small_oracle):
    assert small_oracle.gromov_product(u'a', u'b') == 0
    assert small_oracle.gromov_product(u'c', u'a', 'S') == Fraction(1)
    assert small_oracle.gromov_product(u'cc', u'cc', 'S') == 4


def test_translation_length_estimate(small_oracle):
    estimate = small_oracle.translation_length_estimate(u'c', 3, 'S')
    assert estimate.upper == 2
    assert estimate.point_estimate == 2
    assert estimate.gromov_estimate == 2


def test_translation_length_of_conjugate(small_oracle):
    estimate = small_oracle.translation_length_estimate(u'aB', 2, 'Sstar')
    assert estimate.point_estimate == 2
    assert estimate.gromov_estimate == 2


def test_sphere_sum_counts_at_zero(small_oracle):
    assert small_oracle.sphere_sum('S', 0.0, 2) == pytest.approx(24.0)
    assert small_oracle.log_sphere_sum('S', 0.0, 4) == pytest.approx(log(384))


def test_sphere_sum_of_first_sphere(small_oracle):
    expected = 4 * np.exp(-0.5) + 2 * np.exp(-1.0)
    assert small_oracle.sphere_sum('S', 0.5, 1) == pytest.approx(expected)


def test_ball_average_distortion(small_oracle):
    assert small_oracle.ball_average_distortion('S', 0) == 0
    assert small_oracle.ball_average_distortion('S', 1) == Fraction(8, 7)


def test_relaxation_matches_reduction(free_fixture, small_oracle):
    plain = MetricContext(free_fixture.group, 'S-plain', OrderedDict(
        (label, label) for label in (u'a', u'b', u'A', u'B')))
    assert np.array_equal(small_oracle.register(plain), small_oracle.lengths('S'))


def test_breadth_first_lengths(s_base_oracle):
    assert s_base_oracle.metric_length(u'ab', 'Sstar') == 1
    assert s_base_oracle.metric_length(u'abab', 'Sstar') == 2
    assert s_base_oracle.metric_length(u'aBA', 'Sstar') == 2
    assert s_base_oracle.metric_length(u'bab', 'Sstar') == 2


def test_metric_without_inverse(free_fixture):
    with pytest.raises(MetricError):
        MetricContext(free_fixture.group, 'half', OrderedDict([(u'a', u'a'), (u'b', u'b')]))


def test_metric_with_identity(free_fixture):
    with pytest.raises(MetricError):
        MetricContext(free_fixture.group, 'trivial', OrderedDict([(u'a', u'a'), (u'A', u'A'), (u'e', u'abC')]))


def test_negative_horizon(free_fixture):
    with pytest.raises(HorizonExceeded):
        CayleyOracle(free_fixture.metric('Sstar'), horizon=-1)


def test_triangle_lengths_are_bounded(triangle_oracle):
    base = triangle_oracle.lengths()
    target = triangle_oracle.lengths('S')
    assert (target >= base).all()
    assert (target <= 2 * base).all()
    assert triangle_oracle.metric_length(u'd', 'S') == 2
    assert triangle_oracle.metric_length(u'd') == 1


def test_s_base_spheres(s_base_oracle):
    assert len(s_base_oracle.sphere(1)) == 4
    assert len(s_base_oracle.sphere(2)) == 12


@pytest.mark.parametrize('name', ['small_oracle', 's_base_oracle', 'triangle_oracle'])
def test_metric_symmetry(request, name):
    oracle = request.getfixturevalue(name)
    for metric in oracle.metrics:
        lengths = oracle.lengths(metric)
        for index in range(oracle.ball_size(4)):
            inverse = oracle.element(oracle.group.invert(oracle.spell(oracle.table.word(index))))
            assert lengths[inverse] == lengths[index]


@pytest.mark.parametrize('name, word, powers', [
    ('free_oracle', u'aB', 4),
    ('free_oracle', u'cA', 4),
    ('triangle_oracle', u'ab', 6),
    ('triangle_oracle', u'aB', 6),
    ('triangle_oracle', u'cd', 6),
])
def test_translation_upper_bound_is_monotone(request, name, word, powers):
    oracle = request.getfixturevalue(name)
    bounds = [oracle.translation_length_estimate(word, n, 'S').upper for n in range(1, powers + 1)]
    assert all(later <= earlier for earlier, later in zip(bounds, bounds[1:]))


def scale_estimates(oracle, target, r):
    """Ball estimates at radius r of the mean distortion and of the growth ratio."""
    tau = oracle.ball_average_distortion(target, r) / oracle.ball_average_distortion(oracle.base.name, r)
    size = oracle.ball_size(r)
    target_ball = int((oracle.lengths(target)[:size] <= r).sum())
    return float(tau), log(size) / log(target_ball)


@pytest.mark.parametrize('name, r', [
    ('deep_free_oracle', 10),
    ('triangle_oracle', 10),
    ('triangle_oracle', 12),
])
def test_distortion_inequality_at_scale(request, name, r):
    tau, ratio = scale_estimates(request.getfixturevalue(name), 'S', r)
    assert tau > ratio - 0.05


def test_free_distortion_estimates(deep_free_oracle):
    tau, ratio = scale_estimates(deep_free_oracle, 'S', 10)
    assert tau == pytest.approx(4.0 / 3)
    assert ratio == pytest.approx(log(2 * 4 ** 10 - 1) / log(2 * 3 ** 10 - 1))


@pytest.mark.parametrize('a', [-1.0, 0.0, 1.0, 2.0])
def test_sphere_sums_approach_theta(free_oracle, free_curve, a):
    value = free_curve.theta(a).value
    gaps = dict((n, abs(free_oracle.log_sphere_sum('S', a, n) / n - value))
                for n in range(6, free_oracle.horizon + 1))
    assert gaps[free_oracle.horizon] < 0.1
    assert gaps[free_oracle.horizon] < gaps[6]
