"""Small helpers shared by the pipeline stages."""

import json
import time
import logging
import contextlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import NumericalFailure


logger = logging.getLogger("complexray")


def parallel_map(func, items, threads=1):
    """Map func over items with at most ``threads`` workers.

    Results keep the order of items, so downstream reductions
    do not depend on the thread count.

    >>> parallel_map(abs, [-1, 2, -3], threads=2)
    [1, 2, 3]
    """
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


@contextlib.contextmanager
def stage(name, timings=None):
    """Time a pipeline stage and label numerical failures raised inside it."""
    logger.info("Stage %s started.", name)
    started = time.perf_counter()
    try:
        yield
    except NumericalFailure as exc:
        if exc.stage is None:
            exc.stage = name
        logger.error("Stage %s failed: %s", name, exc)
        raise
    finally:
        elapsed = time.perf_counter() - started
        if timings is not None:
            timings[name] = elapsed
    logger.info("Stage %s finished in %.3fs.", name, elapsed)


def disc_samples(count, seed=0, radius=1.0):
    """Return ``count`` uniformly distributed points of the disc |z| < radius.

    >>> samples = disc_samples(100, seed=1, radius=0.5)
    >>> bool(np.all(np.abs(samples) < 0.5))
    True
    """
    rng = np.random.default_rng(seed)
    moduli = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    angles = rng.uniform(0.0, 2.0 * np.pi, count)
    return moduli * np.exp(1j * angles)


def complex_pair(value):
    """Serialize complex number as [re, im] pair.

    >>> complex_pair(1 - 2j)
    [1.0, -2.0]
    """
    value = complex(value)
    return [value.real, value.imag]


def json_ready(value):
    """Recursively convert numpy scalars and arrays to plain Python values."""
    if isinstance(value, dict):
        return {str(key): json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(item) for item in value]
    if isinstance(value, np.ndarray):
        return json_ready(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return complex_pair(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def dumps(payload):
    """Serialize payload to deterministic JSON text."""
    return json.dumps(json_ready(payload), indent=2, sort_keys=True) + "\n"


def write_json(path, payload):
    """Write payload as deterministic JSON."""
    with open(path, 'wt', encoding="utf-8") as fp:
        fp.write(dumps(payload))


def read_json(path):
    """Read JSON document."""
    with open(path, encoding="utf-8") as fp:
        return json.load(fp)


def is_power_of_two(value):
    """Whether value is a positive power of two.

    >>> is_power_of_two(256), is_power_of_two(257), is_power_of_two(0)
    (True, False, False)
    """
    return value > 0 and value & (value - 1) == 0
