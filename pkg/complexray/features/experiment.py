"""
Truncation experiments
======================

``approx`` truncates an analytic field at every tolerance and compares
sinograms in discrete L^q norms:

.. code-block:: text

    -e, --eps FLOAT   Truncation tolerance. Can be supplied multiple times.
    --q FLOAT         L^q exponent of sinogram distances, the sup norm is
                      always included. Can be supplied multiple times.

For example:

.. code-block:: shell

    $ complexray approx --eps 0.1 --eps 0.05 --eps 0.01 --q 1 --q 2
"""

from .base import BaseFeature, ClickOption


class Tolerances(BaseFeature):
    """Truncation tolerances."""

    OPTION_NAME = 'eps'
    CLICK_OPTION = ClickOption(
        long_option='--eps',
        short_option='-e',
        multiple=True,
        type=float,
        help_text='Truncation tolerance. Can be supplied multiple times.',
    )
    CONVERT = float


class Exponents(BaseFeature):
    """L^q exponents of sinogram distances."""

    OPTION_NAME = 'q'
    CLICK_OPTION = ClickOption(
        long_option='--q',
        multiple=True,
        type=float,
        help_text='L^q exponent of sinogram distances. Can be supplied multiple times.',
    )
    CONVERT = float
