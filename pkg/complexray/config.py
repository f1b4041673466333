"""
Run configuration
=================

Numeric settings come from three places, in order of precedence:
command line flags, the ``--config`` file, built-in defaults.

The config file is flat ``key = value`` text with ``#`` comments.
Keys are option names, dashes and underscores are interchangeable,
and repeatable options take comma separated lists:

.. code-block:: ini

    # desk-scale run
    n = 128
    ntheta = 256
    ns = 257
    mask = 0.95
    eps = 0.1, 0.05, 0.01
"""

import logging
import configparser

import click

from .flow import LABELINGS
from .options import CONFIG, LIST_OPTIONS
from .utils import is_power_of_two


logger = logging.getLogger("complexray")

SECTION = 'run'

ALIASES = {
    'ntheta': 'n_theta',
    'ns': 'n_s',
    'samples': 'hness_samples',
}


def read_config(path):
    """Read flat key-value file into CONFIG and return the parsed mapping."""
    with open(path, encoding="utf-8") as fp:
        text = fp.read()
    parser = configparser.ConfigParser(inline_comment_prefixes=('#',))
    try:
        parser.read_string(f"[{SECTION}]\n{text}", source=path)
    except configparser.Error as exc:
        raise click.UsageError(f"Can't parse config file {path}: {exc}") from exc
    values = {
        normalize_key(key): parse_value(normalize_key(key), value)
        for key, value in parser[SECTION].items()
    }
    CONFIG.update(values)
    logger.debug("Read %d settings from %s.", len(values), path)
    return values


def normalize_key(key):
    """Canonical option name for a config key.

    >>> normalize_key('quad-n'), normalize_key('ntheta')
    ('quad_n', 'n_theta')
    """
    key = key.strip().lower().replace('-', '_')
    return ALIASES.get(key, key)


def parse_value(key, value):
    """Parse value as comma-delimited list if key is in LIST_OPTIONS

    >>> parse_value('eps', '0.1, 0.01')
    ['0.1', '0.01']
    """
    if key in LIST_OPTIONS:
        return [item.strip()
                for item in value.split(',')
                if item.strip()]
    return value.strip()


class RunConfig:
    """Resolved and validated settings of one run."""

    DEFAULTS = {
        'field': None,
        'phantom': None,
        'sinogram': None,
        'analytic': None,
        'n': 128,
        'n_theta': 256,
        'n_s': 257,
        'n_curves': 128,
        'mask': 0.95,
        'quad_n': 512,
        'labeling': 'height',
        'hness_samples': 64,
        'out': 'out',
        'threads': 1,
        'seed': 0,
        'eps': (0.1, 0.05, 0.01),
        'q': (1.0, 2.0),
    }

    def __init__(self, **values):
        unknown = set(values) - set(self.DEFAULTS)
        if unknown:
            raise click.UsageError(f"Unknown settings: {', '.join(sorted(unknown))}")
        settings = dict(self.DEFAULTS)
        settings.update({key: value for key, value in values.items() if value is not None})
        for key, value in settings.items():
            setattr(self, key, value)
        self.eps = tuple(float(value) for value in self.eps)
        self.q = tuple(float(value) for value in self.q)
        self.validate()

    def __repr__(self):
        return f"<RunConfig n={self.n} n_theta={self.n_theta} n_s={self.n_s} labeling={self.labeling}>"

    @classmethod
    def from_features(cls, features):
        """Collect values of every bound feature."""
        return cls(**features.settings())

    def replace(self, **values):
        """Copy with some settings changed."""
        settings = self.to_json()
        settings.update(values)
        return RunConfig(**settings)

    def validate(self):
        """Raise click.UsageError on the first invalid setting."""
        positive_ints = ('n', 'n_theta', 'n_s', 'n_curves', 'quad_n', 'hness_samples', 'threads')
        for key in positive_ints:
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise click.UsageError(f"{key} must be a positive integer, got {value!r}")
        if not is_power_of_two(self.n_theta):
            raise click.UsageError(f"n_theta must be a power of two, got {self.n_theta}")
        if self.n_s % 2 == 0 or self.n_s < 5:
            raise click.UsageError(f"n_s must be odd and at least 5, got {self.n_s}")
        if self.n_curves < 8:
            raise click.UsageError(f"n_curves must be at least 8, got {self.n_curves}")
        if not 0.0 < self.mask < 1.0:
            raise click.UsageError(f"mask must lie in (0, 1), got {self.mask}")
        if self.labeling not in LABELINGS:
            raise click.UsageError(f"labeling must be one of {', '.join(LABELINGS)}, got {self.labeling!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise click.UsageError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not self.eps or any(value <= 0 for value in self.eps):
            raise click.UsageError(f"eps values must be positive, got {list(self.eps)}")
        if any(value < 1 for value in self.q):
            raise click.UsageError(f"q values must be at least 1, got {list(self.q)}")

    def to_json(self):
        """Plain mapping of every setting."""
        return {key: getattr(self, key) for key in self.DEFAULTS}
