"""
Legendre transforms of a Manhattan curve and the rigidity verdicts built on them.

Every transform is computed by bisection on theta', which is monotone because
theta is convex.
"""
import logging
from collections import namedtuple

import click_log
import numpy as np

from manhattan.group import ManhattanError
from manhattan.thermo import BracketError

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

SLOPE_TOLERANCE = 1e-10
BRACKET_LIMIT = 2 ** 10
ENDPOINT_TOLERANCE = 1e-12
RIGIDITY_THRESHOLD = 1e-8
DUALITY_TOLERANCE = 1e-9
INFINITY = float('inf')

SpectrumSample = namedtuple('SpectrumSample', 'alpha dimension attained_at_a endpoint')
RateFunctionSample = namedtuple('RateFunctionSample', 's I attained_at_t limit')
RigidityVerdict = namedtuple('RigidityVerdict', 'theta_second_at_zero straight_line roughly_similar dilation_equal '
                                                'verdict mean_distortion growth_ratio evidence diagnostics')
InverseCurveCheck = namedtuple('InverseCurveCheck', 'max_deviation tau_product dual_slopes_ok samples')

ROUGHLY_SIMILAR = u'roughly similar'
NOT_ROUGHLY_SIMILAR = u'not roughly similar'
INDETERMINATE = u'indeterminate'


class OutOfRange(namedtuple('OutOfRange', 'value low high')):
    """Marker for a sample outside the admissible range; falsy."""

    def __bool__(self):
        return False

    __nonzero__ = __bool__

    def __str__(self):
        return u'%r outside (%s, %s)' % (self.value, self.low, self.high)


def solve_slope(curve, slope, tol=SLOPE_TOLERANCE):
    """The parameter a with theta'(a) = slope."""
    def derivative(a):
        return curve.derivatives(a).theta_prime

    low, high = -1.0, 1.0
    while derivative(low) > slope:
        low *= 2
        if abs(low) > BRACKET_LIMIT:
            raise BracketError(u'theta\' stays above %r down to a=%g' % (slope, low))
    while derivative(high) < slope:
        high *= 2
        if high > BRACKET_LIMIT:
            raise BracketError(u'theta\' stays below %r up to a=%g' % (slope, high))
    while high - low > tol:
        middle = (low + high) / 2
        if derivative(middle) < slope:
            low = middle
        else:
            high = middle
    return (low + high) / 2


def _at_endpoint(value, endpoint):
    return abs(value - float(endpoint)) <= ENDPOINT_TOLERANCE


def multifractal_spectrum(curve, alpha, endpoints=False):
    """
    inf over a of a alpha + theta(a) for alpha strictly between the dilation
    constants. With endpoints=True the two limits along the asymptotes are
    reported as endpoint samples.
    """
    dilation = curve.dilation_constants()
    low, high = dilation.alpha_min.value, dilation.alpha_max.value
    if endpoints and _at_endpoint(alpha, low):
        return SpectrumSample(alpha, curve.gap_limit(1), INFINITY, True)
    if endpoints and _at_endpoint(alpha, high):
        return SpectrumSample(alpha, curve.gap_limit(-1), -INFINITY, True)
    if not float(low) < alpha < float(high):
        return OutOfRange(alpha, low, high)
    a = solve_slope(curve, -alpha)
    return SpectrumSample(alpha, a * alpha + curve.theta(a).value, a, False)


def ldp_rate_function(curve, s):
    """
    I(s) = theta(0) + sup over t of (t s - theta(-t)) for a curve whose base
    metric defines the spheres. Infinite outside [alpha_min, alpha_max].
    """
    dilation = curve.dilation_constants()
    low, high = dilation.alpha_min.value, dilation.alpha_max.value
    v = curve.theta(0.0).value
    if _at_endpoint(s, low):
        return RateFunctionSample(s, v - curve.gap_limit(1), -INFINITY, True)
    if _at_endpoint(s, high):
        return RateFunctionSample(s, v - curve.gap_limit(-1), INFINITY, True)
    if not float(low) < s < float(high):
        return RateFunctionSample(s, INFINITY, None, False)
    sample = multifractal_spectrum(curve, s)
    return RateFunctionSample(s, max(v - sample.dimension, 0.0), -sample.attained_at_a, False)


def rigidity_report(curve, threshold=RIGIDITY_THRESHOLD):
    """
    Straight-line test on theta''(0), compared with the exact test
    alpha_min == alpha_max. Disagreement yields an indeterminate verdict.
    """
    curvature = curve.derivatives(0.0).theta_second
    dilation = curve.dilation_constants()
    rates = curve.growth_rates()
    tau = curve.mean_distortion()
    ratio = rates.v / rates.v_star

    straight = curvature <= threshold
    dilation_equal = dilation.alpha_min.value == dilation.alpha_max.value
    diagnostics = None
    if straight == dilation_equal:
        verdict = ROUGHLY_SIMILAR if straight else NOT_ROUGHLY_SIMILAR
    else:
        verdict = INDETERMINATE
        diagnostics = u'theta\'\'(0) = %.3g %s threshold %.1g but alpha_min = %s, alpha_max = %s' % (
            curvature, u'below' if straight else u'above', threshold, dilation.alpha_min.value,
            dilation.alpha_max.value)
        logger.warning(u'Rigidity indeterminate: %s', diagnostics)
    return RigidityVerdict(curvature, straight, straight, dilation_equal, verdict, tau, ratio, abs(tau - ratio),
                           diagnostics)


def inverse_curve_check(curve_ab, curve_ba, grid):
    """max over the grid of |theta_BA(theta_AB(a)) - a| and the slope product tau_AB tau_BA."""
    group_ab = curve_ab.automaton.meta.get('group')
    group_ba = curve_ba.automaton.meta.get('group')
    if group_ab != group_ba:
        raise MismatchError(u'Curves come from different groups: %s and %s' % (group_ab, group_ba))
    if curve_ab.base is not None and curve_ba.weight != curve_ab.base or \
            curve_ba.base is not None and curve_ab.weight != curve_ba.base:
        raise MismatchError(u'Curves are not dual: %r and %r' % (curve_ab, curve_ba))

    samples = []
    for a in np.asarray(grid, dtype=float):
        b = curve_ab.theta(float(a)).value
        samples.append((float(a), b, curve_ba.theta(b).value - float(a)))
    deviation = max(abs(sample[2]) for sample in samples) if samples else 0.0
    product = curve_ab.mean_distortion() * curve_ba.mean_distortion()
    return InverseCurveCheck(deviation, product, product >= 1 - DUALITY_TOLERANCE, samples)


class MismatchError(ManhattanError):
    pass
