from __future__ import print_function, absolute_import

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from os import makedirs, path

import click
import click_log
import numpy as np

from manhattan import VERSION
from manhattan.group import ManhattanError, check_confluence
from manhattan.automaton import (INCREMENTS, LABELS, CertificationError, build_cone_automaton, certify,
                                 describe_changes, diff_automata, dumps, load_automaton,
                                 minimal_cone_automaton)
from manhattan.thermo import DEFAULT_TOLERANCE, ManhattanCurve
from manhattan.analysis import (INDETERMINATE, ROUGHLY_SIMILAR, inverse_curve_check, ldp_rate_function,
                                multifractal_spectrum, rigidity_report)
from manhattan.fixtures import load_fixture
from manhattan.export import (CURVE_HEADER, EMPIRICAL_HEADER, RATE_HEADER, SPECTRUM_HEADER, Provenance,
                              save_table, write_table)

logger = logging.getLogger('manhattan')
click_log.basic_config(logger)

DEFAULT_GRID = (-3.0, 3.0, 121)
RANGE_SAMPLES = 101
DUAL_TOLERANCE = 1e-6


class GridType(click.ParamType):
    name = 'lo:hi:count'

    def convert(self, value, param, ctx):
        if isinstance(value, tuple):
            return value
        try:
            low, high, count = value.split(':')
            return float(low), float(high), int(count)
        except ValueError:
            self.fail(u'%s is not of the form lo:hi:count' % value, param, ctx)


class RunConfig(object):
    def __init__(self, fixture, base, target, horizon=10, cone_radius=None, grid=None, tol=DEFAULT_TOLERANCE,
                 out=None, workers=1, weighting=INCREMENTS):
        self.fixture = fixture
        self.base = base
        self.target = target
        self.horizon = horizon
        self.cone_radius = cone_radius
        self.grid = grid
        self.tol = tol
        self.out = out
        self.workers = workers
        self.weighting = weighting

        if horizon < 0:
            raise click.BadParameter(u'horizon must be non-negative', param_hint='-N/--horizon')
        if cone_radius is not None and horizon < cone_radius + 2:
            raise click.BadParameter(u'horizon %d must be at least cone radius + 2 = %d' % (
                horizon, cone_radius + 2), param_hint='-N/--horizon')
        if grid is not None:
            low, high, count = grid
            if count < 2:
                raise click.BadParameter(u'grid count must be at least 2', param_hint='--grid')
            if not low < high:
                raise click.BadParameter(u'grid needs lo < hi', param_hint='--grid')
        if tol <= 0:
            raise click.BadParameter(u'tolerance must be positive', param_hint='--tol')
        if workers < 1:
            raise click.BadParameter(u'need at least one worker', param_hint='--workers')

    def points(self, default=DEFAULT_GRID):
        low, high, count = self.grid or default
        return [float(value) for value in np.linspace(low, high, count)]

    def provenance(self, fixture, automaton=None):
        depth = automaton.meta.get('depth', self.horizon) if automaton is not None else self.horizon
        return Provenance([('fixture', fixture.name), ('sha256', fixture.digest()), ('base', self.base),
                           ('target', self.target), ('weighting', self.weighting), ('depth', depth),
                           ('tol', u'%g' % self.tol)])


def run_options(command):
    options = [
        click.option('--fixture', required=True, help='Fixture name or directory (searched in MANHATTAN_FIXTURE_DIR, '
                                                       'then the packaged fixtures)'),
        click.option('--base', default='Sstar', help='Base metric whose spheres are enumerated (default: Sstar)'),
        click.option('--target', default='S', help='Target metric used as edge weight (default: S)'),
        click.option('-N', '--horizon', default=10, type=int,
                     help='Oracle horizon and certification depth (default: 10)'),
        click.option('-k', '--cone-radius', type=int, help='Cone radius; the smallest certifying radius if omitted'),
        click.option('--grid', type=GridType(), help='Sample grid lo:hi:count'),
        click.option('--tol', default=DEFAULT_TOLERANCE, type=float, help='Perron tolerance (default: 1e-10)'),
        click.option('--out', type=click.Path(file_okay=False),
                     help='Output directory; tables go to stdout if omitted'),
        click.option('--workers', default=1, type=int, help='Threads used for grid evaluation (default: 1)'),
        click.option('--label-weights', is_flag=True,
                     help='Weight each edge by the target length of its label instead of the target increment'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def weighting(label_weights):
    return LABELS if label_weights else INCREMENTS


@click.group()
@click.version_option(version=VERSION, prog_name='manhattan')
@click_log.simple_verbosity_option(logger, default='WARNING')
def manhattan():  # pragma: no cover
    pass


def get_fixture(name):
    return load_fixture(name)


def get_oracle(fixture, config, target=None):
    return fixture.oracle(config.base, [target or config.target], config.horizon)


def get_automaton(fixture, config, target=None, oracle=None):
    """
    The shipped automaton for the base metric, certified to the horizon unless
    it records that depth already, or a cone automaton built on demand. A
    given oracle is used for both.
    """
    target = target or config.target
    automaton = fixture.automaton(config.base)
    if automaton is not None and target in automaton.weight_names and config.weighting == INCREMENTS:
        location = fixture.automaton_path(config.base)
        depth = automaton.meta.get('depth', 0)
        if depth >= config.horizon:
            logger.info(u'Using shipped automaton %s, certified to depth %d', location, depth)
            return automaton
        logger.info(u'Certifying shipped automaton %s to depth %d', location, config.horizon)
        report = certify(automaton, oracle or get_oracle(fixture, config, target), depth=config.horizon)
        if not report.ok:
            raise CertificationError(u'Shipped automaton %s: %s' % (location, report))
        return automaton.with_meta(depth=config.horizon)
    logger.info(u'Building cone automaton for %s with %s weight %s to depth %d', config.base, config.weighting,
                target, config.horizon)
    oracle = oracle or get_oracle(fixture, config, target)
    if config.cone_radius:
        automaton, report = build_cone_automaton(oracle, [target], config.cone_radius, weighting=config.weighting)
    else:
        automaton, report = minimal_cone_automaton(oracle, [target], weighting=config.weighting)
    if not report.ok:
        raise CertificationError(str(report))
    return automaton.with_meta(group=fixture.name)


def get_curve(fixture, config, target=None):
    automaton = get_automaton(fixture, config, target)
    return ManhattanCurve(automaton, target or config.target, tol=config.tol)


def evaluate(function, points, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(function, points))
    return [function(point) for point in points]


def emit(config, filename, header, rows, provenance):
    if config.out:
        location = save_table(config.out, filename, header, rows, provenance)
        click.secho(u'Wrote %s' % location, fg='green', err=True)
    else:
        write_table(click.get_text_stream('stdout'), header, rows, provenance)


def curve_rows(curve, points, workers):
    def row(a):
        value = curve.theta(a)
        derivatives = curve.derivatives(a)
        return a, value.value, derivatives.theta_prime, derivatives.theta_second, len(value.maximal_components)
    return evaluate(row, points, workers)


def range_points(curve, config):
    """Grid points, or RANGE_SAMPLES points spanning [alpha_min, alpha_max] when no grid is given."""
    if config.grid:
        return config.points()
    dilation = curve.dilation_constants()
    low, high = dilation.alpha_min.value, dilation.alpha_max.value
    return [float(low + (high - low) * Fraction(i, RANGE_SAMPLES - 1)) for i in range(RANGE_SAMPLES)]


def spectrum_rows(curve, points, workers):
    samples = evaluate(lambda alpha: multifractal_spectrum(curve, alpha, endpoints=True), points, workers)
    return [(sample.alpha, sample.dimension, sample.attained_at_a) for sample in samples if sample]


def rate_rows(curve, points, workers):
    samples = evaluate(lambda s: ldp_rate_function(curve, s), points, workers)
    return [(sample.s, sample.I, sample.attained_at_t) for sample in samples]


def cycle_word(automaton, witness):
    return u''.join(automaton.edges[index].label for index in witness)


def fail(error):
    click.secho('%s\n' % str(error), fg='red', err=True)
    exit(1)


@click.command()
@click.option('--fixture', required=True, help='Fixture name or directory')
def validate(fixture):
    """
    Validate a fixture: presentation, rewriting systems, metrics and shipped automata.
    """
    try:
        fixture = get_fixture(fixture)
        presentation = fixture.presentation
        click.secho(u'Fixture %s (sha256 %s)' % (fixture.name, fixture.digest()))
        click.secho(u'Alphabet: %s' % u' '.join(presentation.letters))
        click.secho(u'Relators: %s' % (u', '.join(presentation.relators) or u'-'))
        if presentation.rules is not None:
            result = check_confluence(presentation.rules)
            if not result.confluent:
                raise ManhattanError(u'Rewriting system is not confluent: %s -> %s' % (
                    result.witness, u', '.join(result.descendants)))
            click.secho(u'Rewriting system: %d rules, confluent' % len(presentation.rules), fg='green')
        for name in fixture.metric_names:
            metric = fixture.metric(name)
            click.secho(u'Metric %s: %s' % (name, u' '.join(metric.labels)), fg='green')
        for name in fixture.metric_names:
            automaton = fixture.automaton(name)
            if automaton is not None:
                click.secho(u'Automaton %s: %d states, %d edges, weights %s' % (
                    name, automaton.states, len(automaton.edges), u','.join(automaton.weight_names)), fg='green')
        if fixture.triangle is not None:
            click.secho(u'Word problem: reflection representation of the %s triangle group' %
                        u'(%d,%d,%d)' % fixture.triangle)
        click.secho(u'Word problem engine: %s' % type(fixture.group.engine).__name__, fg='green')
    except ManhattanError as e:
        fail(e)


@click.command(name='build-automaton')
@run_options
def build_automaton(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Build, minimize and certify the cone-type automaton of the base metric
    with the target metric as edge weight.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        oracle = get_oracle(fixture, config)
        if cone_radius:
            automaton, report = build_cone_automaton(oracle, [target], cone_radius, weighting=config.weighting)
        else:
            automaton, report = minimal_cone_automaton(oracle, [target], weighting=config.weighting)
        if not report.ok:
            raise CertificationError(str(report))
        automaton = automaton.with_meta(group=fixture.name)
        if out:
            location = path.join(out, u'%s.json' % base)
            if not path.isdir(out):
                makedirs(out)
            with open(location, 'w') as f:
                f.write(dumps(automaton))
            click.secho(u'Wrote %s' % location, fg='green', err=True)
        else:
            click.echo(dumps(automaton), nl=False)
        click.secho(u'%d states, %d edges, %s' % (automaton.states, len(automaton.edges), report),
                    fg='green', err=True)
    except ManhattanError as e:
        fail(e)


@click.command(name='certify')
@run_options
def certify_command(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Certify the automaton of the base metric against the Cayley ball oracle.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        oracle = get_oracle(fixture, config)
        automaton = get_automaton(fixture, config, oracle=oracle)
        report = certify(automaton, oracle, depth=horizon)
        if not report.ok:
            raise CertificationError(str(report))
        click.secho(u'%s: %d paths match %d ball elements' % (report, oracle.count, oracle.count), fg='green')
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def curve(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Sample theta and its derivatives on the grid (default -3:3:121).
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        rows = curve_rows(manhattan_curve, config.points(), workers)
        emit(config, u'curve.csv', CURVE_HEADER, rows, config.provenance(fixture, manhattan_curve.automaton))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
@click.option('--richardson', is_flag=True, help='Second derivative by Richardson extrapolation')
def derivatives(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights, richardson):
    """
    theta' and theta'' with the cross-component spread, at a = 0 or on the grid.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        method = 'richardson' if richardson else 'perturbation'
        points = config.points() if grid else [0.0]
        for a, result in zip(points, evaluate(lambda a: manhattan_curve.derivatives(a, method), points, workers)):
            click.secho(u'a = %.6g: theta\' = %.17g, theta\'\' = %.17g, spread = %.3g' % (
                a, result.theta_prime, result.theta_second, result.cross_component_spread))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def growth(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Volume growth rates v = theta(0) and v_star (root of theta).
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        manhattan_curve = get_curve(get_fixture(config.fixture), config)
        rates = manhattan_curve.growth_rates()
        click.secho(u'v = %.17g' % rates.v)
        click.secho(u'v_star = %.17g' % rates.v_star)
        click.secho(u'v_star / v = %.17g' % (rates.v_star / rates.v))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def distortion(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Mean distortion tau = -theta'(0), with the exact ball average at the horizon.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        click.secho(u'tau = %.17g' % manhattan_curve.mean_distortion())
        if horizon > 0:
            oracle = fixture.oracle(base, [target], horizon)
            average = oracle.ball_average_distortion(target, horizon)
            click.secho(u'ball average at radius %d = %s (%.6g)' % (horizon, average, float(average)))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def dilation(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Exact dilation constants (minimum and maximum cycle means) with witness cycles.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        manhattan_curve = get_curve(get_fixture(config.fixture), config)
        constants = manhattan_curve.dilation_constants()
        automaton = manhattan_curve.automaton
        click.secho(u'Dil = (%s, %s)' % (constants.alpha_min.value, constants.alpha_max.value))
        click.secho(u'alpha_min %s on cycle %s' % (constants.alpha_min.value,
                                                  cycle_word(automaton, constants.alpha_min.witness)))
        click.secho(u'alpha_max %s on cycle %s' % (constants.alpha_max.value,
                                                  cycle_word(automaton, constants.alpha_max.witness)))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def spectrum(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Multifractal spectrum inf_a (a alpha + theta(a)); alpha spans [alpha_min, alpha_max] unless a grid is given.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        rows = spectrum_rows(manhattan_curve, range_points(manhattan_curve, config), workers)
        emit(config, u'spectrum.csv', SPECTRUM_HEADER, rows, config.provenance(fixture, manhattan_curve.automaton))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def ldp(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Large deviation rate function I(s) of target length over base spheres.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        rows = rate_rows(manhattan_curve, range_points(manhattan_curve, config), workers)
        emit(config, u'ldp.csv', RATE_HEADER, rows, config.provenance(fixture, manhattan_curve.automaton))
    except ManhattanError as e:
        fail(e)


def print_verdict(verdict):
    colour = 'green' if verdict.verdict == ROUGHLY_SIMILAR else 'yellow' if verdict.verdict == INDETERMINATE else None
    click.secho(u'verdict: %s' % verdict.verdict, fg=colour)
    click.secho(u'theta\'\'(0) = %.10g' % verdict.theta_second_at_zero)
    click.secho(u'tau = %.6g, v/v_star = %.6g, |tau - v/v_star| = %.3g' % (
        verdict.mean_distortion, verdict.growth_ratio, verdict.evidence))
    if verdict.diagnostics:
        click.secho(verdict.diagnostics, fg='yellow')


@click.command()
@run_options
def rigidity(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Decide whether base and target are roughly similar.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        print_verdict(rigidity_report(get_curve(get_fixture(config.fixture), config)))
    except ManhattanError as e:
        fail(e)


@click.command(name='dual-check')
@run_options
def dual_check(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Check theta_BA(theta_AB(a)) = a on the grid (default -2:2:41) and tau_AB tau_BA >= 1.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        forward = get_curve(fixture, config)
        swapped = RunConfig(config.fixture, target, base, horizon, cone_radius, grid, tol, out, workers,
                            config.weighting)
        backward = get_curve(fixture, swapped)
        result = inverse_curve_check(forward, backward, config.points((-2.0, 2.0, 41)))
        click.secho(u'max |theta_BA(theta_AB(a)) - a| = %.3g' % result.max_deviation)
        click.secho(u'tau_AB tau_BA = %.17g' % result.tau_product)
        if result.max_deviation > DUAL_TOLERANCE or not result.dual_slopes_ok:
            raise ManhattanError(u'Dual curves disagree: deviation %.3g, slope product %.6g' % (
                result.max_deviation, result.tau_product))
        click.secho(u'Dual curves agree', fg='green')
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def empirical(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    (1/n) log of the weighted base sphere sums for n <= horizon, against theta(a).
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        oracle = fixture.oracle(base, [target], horizon)

        def rows_at(a):
            value = manhattan_curve.theta(a).value
            rows = []
            for n in range(1, horizon + 1):
                estimate = oracle.log_sphere_sum(target, a, n) / n
                rows.append((a, n, estimate, value, abs(estimate - value)))
            return rows

        rows = [row for rows in evaluate(rows_at, config.points(), workers) for row in rows]
        emit(config, u'empirical.csv', EMPIRICAL_HEADER, rows, config.provenance(fixture))
    except ManhattanError as e:
        fail(e)


@click.command()
@run_options
def report(fixture, base, target, horizon, cone_radius, grid, tol, out, workers, label_weights):
    """
    Growth, distortion, dilation, curvature and rigidity in one report; with
    --out the curve, spectrum and rate tables are written alongside.
    """
    try:
        config = RunConfig(fixture, base, target, horizon, cone_radius, grid, tol, out, workers,
                           weighting(label_weights))
        fixture = get_fixture(config.fixture)
        manhattan_curve = get_curve(fixture, config)
        automaton = manhattan_curve.automaton
        provenance = config.provenance(fixture, automaton)
        rates = manhattan_curve.growth_rates()
        constants = manhattan_curve.dilation_constants()
        verdict = rigidity_report(manhattan_curve)

        lines = provenance.lines() + [
            u'automaton: %d states, %d edges, components %s' % (
                automaton.states, len(automaton.edges),
                u','.join(u'%d' % len(component.edges) for component in manhattan_curve.components)),
            u'v = %.17g' % rates.v,
            u'v_star = %.17g' % rates.v_star,
            u'tau = %.6g (%.17g)' % (manhattan_curve.mean_distortion(), manhattan_curve.mean_distortion()),
            u'Dil = (%s, %s)' % (constants.alpha_min.value, constants.alpha_max.value),
            u'theta\'\'(0) = %.10g' % verdict.theta_second_at_zero,
            u'verdict: %s' % verdict.verdict,
        ]
        if verdict.diagnostics:
            lines.append(verdict.diagnostics)
        for line in lines:
            click.secho(line)

        if out:
            emit(config, u'curve.csv', CURVE_HEADER, curve_rows(manhattan_curve, config.points(), workers),
                 provenance)
            ranged = RunConfig(config.fixture, base, target, horizon, cone_radius, None, tol, out, workers,
                               config.weighting)
            points = range_points(manhattan_curve, ranged)
            emit(config, u'spectrum.csv', SPECTRUM_HEADER, spectrum_rows(manhattan_curve, points, workers),
                 provenance)
            emit(config, u'ldp.csv', RATE_HEADER, rate_rows(manhattan_curve, points, workers), provenance)
            with open(path.join(out, u'%s.json' % base), 'w') as f:
                f.write(dumps(automaton))
            with open(path.join(out, u'report.txt'), 'w') as f:
                f.write(u'\n'.join(lines) + u'\n')
    except ManhattanError as e:
        fail(e)


@click.command()
@click.argument('first', type=click.Path(exists=True, dir_okay=False))
@click.argument('second', type=click.Path(exists=True, dir_okay=False))
def diff(first, second):
    """
    Compare two automaton files.
    """
    try:
        changes = diff_automata(load_automaton(first), load_automaton(second))
        colours = {u'+': 'green', u'-': 'red', u'~': 'yellow'}
        for sign, text in describe_changes(changes):
            click.secho(u'%s %s' % (sign, text), fg=colours[sign])
        if not changes:
            click.secho('Automata are identical', fg='green')
    except ManhattanError as e:
        fail(e)


manhattan.add_command(validate)
manhattan.add_command(build_automaton)
manhattan.add_command(certify_command)
manhattan.add_command(curve)
manhattan.add_command(derivatives)
manhattan.add_command(growth)
manhattan.add_command(distortion)
manhattan.add_command(dilation)
manhattan.add_command(spectrum)
manhattan.add_command(ldp)
manhattan.add_command(rigidity)
manhattan.add_command(dual_check)
manhattan.add_command(empirical)
manhattan.add_command(report)
manhattan.add_command(diff)

if __name__ == '__main__':  # pragma: no cover
    manhattan()
