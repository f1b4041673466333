"""
Output directory and reproducibility
====================================

Every command writes its files under the output directory, together
with ``manifest.json`` listing content hashes of inputs and outputs:

.. code-block:: text

    -o, --out PATH         Output directory (default ``out``).
    -j, --threads INTEGER  Maximum number of worker threads (default 1).
    --seed INTEGER         Seed of random disc samples (default 0).

Results do not depend on ``--threads``: two runs with the same
settings and seed produce byte-identical CSV and JSON files.
"""

import os

from .base import BaseFeature, ClickOption, Threads


class OutputDir(BaseFeature):
    """Directory receiving every output file."""

    OPTION_NAME = 'out'
    CLICK_OPTION = ClickOption(
        long_option='--out',
        short_option='-o',
        help_text='Output directory (default out).',
    )

    def file_path(self, file_name, directory=None):
        """Compose output path, creating the directory.

        >>> import os.path, tempfile
        >>> root = tempfile.mkdtemp()
        >>> OutputDir().file_path('a.json', root) == os.path.join(root, 'a.json')
        True
        """
        directory = directory or self.value or 'out'
        os.makedirs(directory, exist_ok=True)
        return os.path.join(directory, file_name)


class Seed(BaseFeature):
    """Seed of random sample sets."""

    OPTION_NAME = 'seed'
    CLICK_OPTION = ClickOption(
        long_option='--seed',
        type=int,
        help_text='Seed of random disc samples (default 0).',
    )
    CONVERT = int


__all__ = ['OutputDir', 'Seed', 'Threads']
