"""
Run manifest and content hashes
===============================

Every command writes ``manifest.json`` next to its outputs:

.. code-block:: json

    {
      "command": "forward",
      "inputs": {"field.json": "5c3b...", "phantom.json": "a1f0..."},
      "outputs": {"sinogram.csv": "9e07...", "sinogram.json": "77d2..."},
      "versions": {"complexray": "0.3.0", "numpy": "...", "scipy": "..."},
      "timings": {"chart": 1.93, "ray_transform": 4.11}
    }

Hashes are hex SHA1 digests of file contents. Timings appear only here,
so every other output is byte-identical across runs with the same
configuration.

A sinogram carries the hash of the field it was computed with, which lets
``invert`` refuse a field that does not match:

.. code-block:: shell

    $ complexray invert --sinogram out/sinogram.csv --field other.json
    Sinogram was computed for field 6c25... but other.json hashes to c93d...
"""

import os
import hashlib
import logging
import platform

import click
import numpy as np
import scipy

from . import __version__
from .utils import dumps, write_json


logger = logging.getLogger("complexray")

MANIFEST_NAME = 'manifest.json'


def file_digest(file_path):
    """Hex SHA1 digest of file contents."""
    with open(file_path, 'rb') as fp:
        return hashlib.sha1(fp.read()).hexdigest()


def payload_digest(payload):
    """Hex SHA1 digest of the deterministic JSON form of payload.

    >>> payload_digest({'b': 1, 'a': 2}) == payload_digest({'a': 2, 'b': 1})
    True
    """
    return hashlib.sha1(dumps(payload).encode("utf-8")).hexdigest()


def field_digest(field):
    """Digest identifying a field by its coefficient table."""
    return payload_digest({
        'coeffs': field.to_json()['coeffs'],
        'zero_tol': field.zero_tol,
    })


def versions():
    """Versions of the numerical stack."""
    return {
        'complexray': __version__,
        'click': click.__version__,
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'python': platform.python_version(),
    }


def verify_field_digest(expected, field, field_path):
    """Raise click.UsageError when the field does not match the recorded digest."""
    actual = field_digest(field)
    if expected and expected != actual:
        logger.error("ERROR! Sinogram was computed for field %s but %s hashes to %s.",
                     expected, field_path, actual)
        raise click.UsageError(
            f"Sinogram was computed for field {expected} but {field_path} hashes to {actual}"
        )
    logger.info("OK - field %s matches the sinogram.", field_path)


def write_manifest(out_dir, command, inputs, outputs, timings):
    """Hash inputs and outputs and write manifest.json into out_dir."""
    manifest = {
        'command': command,
        'inputs': {
            os.path.basename(path): file_digest(path)
            for path in inputs
            if path
        },
        'outputs': {
            os.path.relpath(path, out_dir): file_digest(path)
            for path in sorted(outputs)
        },
        'versions': versions(),
        'timings': timings,
    }
    path = os.path.join(out_dir, MANIFEST_NAME)
    write_json(path, manifest)
    logger.info("Manifest with %d outputs written to %s.", len(manifest['outputs']), path)
    return manifest
