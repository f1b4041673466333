"""Global dictionaries holding configuration options.

``OPTIONS`` receives values passed on the command line,
``CONFIG`` receives values read from the ``--config`` file.
"""

OPTIONS = {}

CONFIG = {}

LIST_OPTIONS = {
    'eps',
    'q',
}
