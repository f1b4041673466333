"""
Discretization
==============

.. code-block:: text

    --n INTEGER           Reconstruction grid size n x n on [-1, 1]^2 (default 128).
    --ntheta INTEGER      Number of angles, a power of two (default 256).
    --ns INTEGER          Number of s samples, odd (default 257).
    --n-curves INTEGER    Characteristic curves in the chart (default 128).
    --mask FLOAT          Evaluation disc radius (default 0.95).
    --quad-n INTEGER      Initial Jensen quadrature nodes (default 512).
    --labeling TEXT       Curve labels: height or arclength (default height).
    --samples INTEGER     Disc samples for condition audits (default 64).

Doubling ``--n`` together with ``--ntheta`` is the usual refinement step:

.. code-block:: shell

    $ complexray invert --field quadratic.json --n 256 --ntheta 512 --ns 513
"""

import click

from .base import BaseFeature, ClickOption
from ..flow import LABELINGS


class GridSize(BaseFeature):
    """Reconstruction grid size."""

    OPTION_NAME = 'n'
    CLICK_OPTION = ClickOption(
        long_option='--n',
        type=int,
        help_text='Reconstruction grid size n x n (default 128).',
    )
    CONVERT = int


class AngleCount(BaseFeature):
    """Number of angles of the sinogram."""

    OPTION_NAME = 'n_theta'
    CLICK_OPTION = ClickOption(
        long_option='--ntheta',
        type=int,
        help_text='Number of angles, a power of two (default 256).',
    )
    CONVERT = int


class LabelCount(BaseFeature):
    """Number of s samples of the sinogram."""

    OPTION_NAME = 'n_s'
    CLICK_OPTION = ClickOption(
        long_option='--ns',
        type=int,
        help_text='Number of s samples, odd (default 257).',
    )
    CONVERT = int


class CurveCount(BaseFeature):
    """Number of characteristic curves traced for the chart."""

    OPTION_NAME = 'n_curves'
    CLICK_OPTION = ClickOption(
        long_option='--n-curves',
        type=int,
        help_text='Characteristic curves traced for the chart (default 128).',
    )
    CONVERT = int


class MaskRadius(BaseFeature):
    """Radius of the evaluation disc."""

    OPTION_NAME = 'mask'
    CLICK_OPTION = ClickOption(
        long_option='--mask',
        type=float,
        help_text='Evaluation disc radius in (0, 1) (default 0.95).',
    )
    CONVERT = float


class QuadNodes(BaseFeature):
    """Initial node count of the Jensen quadrature."""

    OPTION_NAME = 'quad_n'
    CLICK_OPTION = ClickOption(
        long_option='--quad-n',
        type=int,
        help_text='Initial Jensen quadrature nodes (default 512).',
    )
    CONVERT = int


class Labeling(BaseFeature):
    """Transverse labeling of characteristic curves."""

    OPTION_NAME = 'labeling'
    CLICK_OPTION = ClickOption(
        long_option='--labeling',
        type=click.Choice(LABELINGS),
        help_text='Curve labels: height or arclength (default height).',
    )


class AuditSamples(BaseFeature):
    """Number of disc samples used by condition audits."""

    OPTION_NAME = 'hness_samples'
    CLICK_OPTION = ClickOption(
        long_option='--samples',
        type=int,
        help_text='Disc samples for condition audits (default 64).',
    )
    CONVERT = int
