"""Test utilities."""

import os
import shutil
import tempfile
import contextlib

from complexray.field import save_field


@contextlib.contextmanager
def temp_dir():
    """Create temporary directory removed on exit."""
    tmp_dir = tempfile.mkdtemp()
    try:
        yield tmp_dir
    finally:
        shutil.rmtree(tmp_dir)


def write_field(directory, field, name='field.json'):
    """Save field into directory and return the file path."""
    path = os.path.join(directory, name)
    save_field(field, path)
    return path
