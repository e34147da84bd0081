import csv
import logging
from collections import OrderedDict
from os import path, makedirs

import click_log

logger = logging.getLogger(__name__)
click_log.basic_config(logger)

SIGNIFICANT_DIGITS = 17

CURVE_HEADER = ('a', 'theta', 'theta_prime', 'theta_second', 'n_maximal_components')
SPECTRUM_HEADER = ('alpha', 'dimension', 'attained_at_a')
RATE_HEADER = ('s', 'I', 'attained_at_t')
EMPIRICAL_HEADER = ('a', 'n', 'log_sphere_sum_over_n', 'theta', 'gap')


def format_number(value):
    if value is None:
        return u''
    if isinstance(value, int):
        return u'%d' % value
    return u'%.*g' % (SIGNIFICANT_DIGITS, float(value))


class Provenance(OrderedDict):
    """Metadata written as '#' comment lines above every table."""

    def lines(self):
        return [u'# %s: %s' % (key, value) for key, value in self.items()]


def write_table(stream, header, rows, provenance=None):
    for line in (provenance.lines() if provenance else ()):
        stream.write(line + u'\n')
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(value) for value in row])


def save_table(directory, filename, header, rows, provenance=None):
    if not path.isdir(directory):
        makedirs(directory)
    location = path.join(directory, filename)
    with open(location, 'w') as f:
        write_table(f, header, rows, provenance)
    logger.info(u'Wrote %s', location)
    return location
