"""
Input files
===========

Pipeline inputs are JSON documents, except sinograms which are CSV
matrices with a JSON sidecar:

.. code-block:: text

    --field PATH       Polynomial field JSON (default: mu = 1).
    --phantom PATH     Phantom JSON (default: three Gaussian bumps).
    --sinogram PATH    Sinogram CSV written by ``forward``.
    --analytic PATH    Analytic field family JSON for ``approx``.
    --config PATH      Flat key = value settings file.

A field file lists the nonzero coefficients a_pq of
mu(z) = sum a_pq z^p conj(z)^q:

.. code-block:: json

    {"name": "quadratic", "coeffs": [{"p": 0, "q": 0, "re": 1.0, "im": 0.0},
                                     {"p": 2, "q": 0, "re": 0.3, "im": 0.0}]}
"""

import os
import logging

import click

from .base import BaseFeature, ClickOption
from ..config import read_config
from ..options import CONFIG, OPTIONS


logger = logging.getLogger("complexray")


class InputPath(BaseFeature):
    """Path to an existing input file."""

    @property
    def path(self):
        """Checked path or None."""
        value = self.value
        if value is not None and not os.path.isfile(value):
            raise click.UsageError(f"{self.CLICK_OPTION.long_option}: file {value} does not exist")
        return value


class FieldPath(InputPath):
    """Polynomial field file."""

    OPTION_NAME = 'field'
    CLICK_OPTION = ClickOption(
        long_option='--field',
        short_option='-f',
        help_text='Polynomial field JSON (default: constant field mu = 1).',
    )


class PhantomPath(InputPath):
    """Phantom file."""

    OPTION_NAME = 'phantom'
    CLICK_OPTION = ClickOption(
        long_option='--phantom',
        short_option='-p',
        help_text='Phantom JSON (default: three Gaussian bumps).',
    )


class SinogramPath(InputPath):
    """Sinogram CSV file."""

    OPTION_NAME = 'sinogram'
    CLICK_OPTION = ClickOption(
        long_option='--sinogram',
        help_text='Sinogram CSV with JSON sidecar, as written by forward.',
    )


class AnalyticPath(InputPath):
    """Analytic field family file."""

    OPTION_NAME = 'analytic'
    CLICK_OPTION = ClickOption(
        long_option='--analytic',
        help_text='Analytic field family JSON (default: geometric, beta 0.3).',
    )


class ConfigFile(InputPath):
    """Settings file read into CONFIG."""

    OPTION_NAME = 'config'
    CLICK_OPTION = ClickOption(
        long_option='--config',
        short_option='-c',
        help_text='Flat key = value settings file; flags override it.',
    )

    def load(self):
        """Read the config file once per path."""
        path = self.path
        if path is None or OPTIONS.get('config_loaded') == path:
            return
        CONFIG.clear()
        read_config(path)
        OPTIONS['config_loaded'] = path
        logger.info("Settings read from %s.", path)
