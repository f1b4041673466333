"""
Forward transforms
==================

``ray_transform``
    integrals of a phantom along the integral curves of every rotated
    field ``X_theta``, sampled on a uniform angle grid and an s-grid.

``beam_transform``
    half the signed difference between the upstream and downstream
    integrals through a point; it solves the transport equation.

``hilbert_s`` and ``s_derivative``
    the filters applied to sinogram rows before backprojection.

Sinogram files are CSV matrices with a ``theta\\s`` corner cell, a header
row of s-nodes, a first column of angles, and a JSON sidecar with the
metadata. Numbers are written with 17 significant digits so that reading
a file back reproduces it bit for bit.
"""

import os
import csv
import logging

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NonDecayingRow, OutOfChart, Trapped
from .flow import time_cap
from .manifest import field_digest
from .utils import parallel_map, read_json, write_json


logger = logging.getLogger("complexray")

CUTOFF_FLAT = 0.8


def _smooth_step(x):
    """C-infinity step from 0 at x <= 0 to 1 at x >= 1."""
    x = np.asarray(x, dtype=float)

    def psi(u):
        positive = u > 0
        return np.where(positive, np.exp(-1.0 / np.where(positive, u, 1.0)), 0.0)

    rising, falling = psi(x), psi(1.0 - x)
    return rising / (rising + falling)


def cutoff(x):
    """Smooth bump equal to 1 on [0, 0.8] and 0 on [1, inf).

    >>> float(cutoff(0.5)), float(cutoff(1.0))
    (1.0, 0.0)
    """
    return 1.0 - _smooth_step((np.asarray(x, dtype=float) - CUTOFF_FLAT) / (1.0 - CUTOFF_FLAT))


class Phantom:
    """Sum of Gaussian bumps times a smooth cutoff at support_radius."""

    def __init__(self, bumps, support_radius=0.9, name='phantom'):
        if not 0.0 < support_radius < 1.0:
            raise ValueError(f"support_radius must lie in (0, 1), got {support_radius}")
        self.bumps = [(complex(center), float(amplitude), float(width)) for center, amplitude, width in bumps]
        for _, _, width in self.bumps:
            if width <= 0:
                raise ValueError(f"Bump width must be positive, got {width}")
        self.support_radius = float(support_radius)
        self.name = name

    def __repr__(self):
        return f"<Phantom {self.name}: {len(self.bumps)} bumps, R={self.support_radius}>"

    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        """f(z) for scalar or array z."""
        z = np.asarray(z, dtype=complex)
        total = np.zeros(z.shape)
        for center, amplitude, width in self.bumps:
            total = total + amplitude * np.exp(-np.abs(z - center) ** 2 / width ** 2)
        return total * cutoff(np.abs(z) / self.support_radius)

    @property
    def resolution(self):
        """Length scale resolved by quadratures of this phantom."""
        widths = [width for _, _, width in self.bumps]
        return min(widths + [0.2 * self.support_radius]) / 16.0

    @property
    def is_zero(self):
        """No bump carries a nonzero amplitude."""
        return all(amplitude == 0.0 for _, amplitude, _ in self.bumps)

    def rotated(self, theta):
        """Phantom z -> f(e^{-i theta} z)."""
        phase = np.exp(1j * theta)
        return Phantom([(phase * center, amplitude, width) for center, amplitude, width in self.bumps],
                       self.support_radius, f"{self.name}-rotated")

    def scaled(self, factor):
        """Phantom times factor."""
        return Phantom([(center, factor * amplitude, width) for center, amplitude, width in self.bumps],
                       self.support_radius, self.name)

    def __add__(self, other):
        """Phantom whose values are the sum of both; cutoffs must coincide."""
        if self.support_radius != other.support_radius:
            raise ValueError(
                f"Cannot add phantoms with support radii {self.support_radius} and {other.support_radius}"
            )
        return Phantom(self.bumps + other.bumps, self.support_radius, f"{self.name}+{other.name}")

    def to_json(self):
        """Serializable representation."""
        return {
            'name': self.name,
            'support_radius': self.support_radius,
            'bumps': [
                {'x': center.real, 'y': center.imag, 'amplitude': amplitude, 'width': width}
                for center, amplitude, width in self.bumps
            ],
        }

    @classmethod
    def from_json(cls, document):
        """Build phantom from its JSON representation."""
        return cls(
            [(complex(bump['x'], bump['y']), bump['amplitude'], bump['width']) for bump in document['bumps']],
            support_radius=document.get('support_radius', 0.9),
            name=document.get('name', 'phantom'),
        )


def default_phantom():
    """Three smooth bumps inside radius 0.9."""
    return Phantom(
        [
            (0.25 + 0.1j, 1.0, 0.15),
            (-0.3 - 0.2j, 0.7, 0.2),
            (0.05 - 0.4j, -0.5, 0.12),
        ],
        support_radius=0.9,
        name='three-bumps',
    )


def load_phantom(path):
    """Read phantom file."""
    return Phantom.from_json(read_json(path))


def save_phantom(phantom, path):
    """Write phantom file."""
    write_json(path, phantom.to_json())


def max_speed(field):
    """Largest |mu| on a polar disc grid."""
    cached = field.metadata.get('max_abs_mu')
    if cached is None:
        radii = np.linspace(0.0, 1.0, 33)
        angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        cached = float(np.max(np.abs(field.evaluate(radii[:, None] * np.exp(1j * angles)))))
        field.metadata['max_abs_mu'] = cached
    return cached


def theta_grid(n_theta):
    """Uniform angles 2 pi j / n_theta."""
    return 2.0 * np.pi * np.arange(n_theta) / n_theta


def make_s_grid(chart, n_s):
    """Odd-sized uniform s-grid covering the chart's s-range padded by 25%."""
    if n_s < 5 or n_s % 2 == 0:
        raise ValueError(f"n_s must be odd and at least 5, got {n_s}")
    low, high = chart.s_range
    center = 0.5 * (low + high)
    half = 1.25 * 0.5 * (high - low)
    return np.linspace(center - half, center + half, n_s)


class Sinogram:
    """Ray-transform values over a (theta x s) grid."""

    def __init__(self, theta, s, values, metadata=None):
        self.theta = np.asarray(theta, dtype=float)
        self.s = np.asarray(s, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.metadata = dict(metadata or {})
        if self.values.shape != (len(self.theta), len(self.s)):
            raise ValueError(f"Sinogram values have shape {self.values.shape}, "
                             f"expected {(len(self.theta), len(self.s))}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Sinogram contains non-finite values")

    def __repr__(self):
        return f"<Sinogram {self.values.shape[0]}x{self.values.shape[1]} {self.metadata.get('field')}>"

    @property
    def s_spacing(self):
        """Uniform s-step."""
        return float(self.s[1] - self.s[0])

    @property
    def theta_spacing(self):
        """Uniform angle step."""
        return 2.0 * np.pi / len(self.theta)

    def save(self, path):
        """Write CSV matrix and JSON sidecar."""
        with open(path, 'wt', encoding="utf-8", newline='') as fp:
            writer = csv.writer(fp)
            writer.writerow(['theta\\s'] + [f"{node:.17g}" for node in self.s])
            for angle, row in zip(self.theta, self.values):
                writer.writerow([f"{angle:.17g}"] + [f"{value:.17g}" for value in row])
        write_json(sidecar_path(path), self.metadata)
        return [path, sidecar_path(path)]

    @classmethod
    def load(cls, path):
        """Read sinogram written by :meth:`save`."""
        with open(path, encoding="utf-8", newline='') as fp:
            rows = list(csv.reader(fp))
        if not rows or rows[0][0] != 'theta\\s':
            raise ValueError(f"{path} is not a sinogram file")
        s = [float(node) for node in rows[0][1:]]
        theta = [float(row[0]) for row in rows[1:]]
        values = [[float(value) for value in row[1:]] for row in rows[1:]]
        metadata = {}
        if os.path.exists(sidecar_path(path)):
            metadata = read_json(sidecar_path(path))
        return cls(theta, s, values, metadata)


def sidecar_path(path):
    """JSON sidecar next to a CSV file."""
    return os.path.splitext(path)[0] + '.json'


def _curve_nodes(curve, phantom, speed):
    step = phantom.resolution / speed
    count = int(np.ceil(curve.duration / step)) + 1
    return curve.uniform(max(count, 9))


def _column(phantom, chart, theta, label, speed):
    low, high = chart.s_range
    if not low < label < high:
        return np.zeros(len(theta))
    curve = chart.curve(float(label))
    times, positions = _curve_nodes(curve, phantom, speed)
    rotated = np.exp(1j * theta)[:, None] * positions[None, :]
    return np.trapz(phantom.evaluate(rotated), times, axis=1)


def ray_transform(phantom, field, chart, n_theta, n_s, threads=1, s_grid=None):
    """Sinogram of the phantom over the curves of every rotated field.

    Pass ``s_grid`` to sample several fields on a common grid; labels
    outside the chart range integrate to zero.
    """
    theta = theta_grid(n_theta)
    s = make_s_grid(chart, n_s) if s_grid is None else np.asarray(s_grid, dtype=float)
    n_s = len(s)
    speed = max_speed(field)
    if phantom.is_zero:
        values = np.zeros((n_theta, n_s))
    else:
        columns = parallel_map(lambda label: _column(phantom, chart, theta, label, speed), s, threads)
        values = np.column_stack(columns)
    metadata = {
        'field': field.name,
        'field_hash': field_digest(field),
        'phantom': phantom.name,
        'labeling': chart.labeling,
        'n_theta': n_theta,
        'n_s': n_s,
        'n_curves': chart.n_curves,
        's_range': list(chart.s_range),
        'quadrature': {'rule': 'trapezoid', 'resolution': phantom.resolution},
    }
    logger.info("Sinogram %dx%d for %s over %s.", n_theta, n_s, phantom.name, field.name)
    return Sinogram(theta, s, values, metadata)


def _integrate_along(phantom, field, start, theta, direction, t_max):
    phase = np.exp(1j * theta)
    step = phantom.resolution / max_speed(field)

    def augmented(_, state):
        point = complex(state[0], state[1])
        value = field.mu_scalar(point)
        return [value.real, value.imag, float(phantom.evaluate(phase * point))]

    def boundary(_, state):
        return state[0] * state[0] + state[1] * state[1] - 1.0

    boundary.terminal = True
    boundary.direction = 1
    solution = solve_ivp(
        augmented, (0.0, direction * t_max), [start.real, start.imag, 0.0],
        method='RK45', rtol=1e-10, atol=1e-13, events=boundary, max_step=4.0 * step,
    )
    if solution.status != 1:
        raise Trapped(f"Beam integration from {start} did not reach the boundary: {solution.message}")
    return float(solution.y[2, -1])


def beam_transform(phantom, field, chart, z, theta):
    """D_theta f(z): half of upstream minus downstream integral through z e^{-i theta}."""
    z = complex(z)
    if abs(z) >= 1.0:
        raise OutOfChart(f"z={z} is not inside the disc")
    start = z * np.exp(-1j * theta)
    upstream = -_integrate_along(phantom, field, start, theta, -1, chart.t_max)
    downstream = _integrate_along(phantom, field, start, theta, 1, chart.t_max)
    return 0.5 * (upstream - downstream)


def _line_kernel_spectrum(padded):
    offsets = np.arange(padded)
    offsets = np.where(offsets < padded // 2, offsets, offsets - padded)
    kernel = np.zeros(padded)
    odd = offsets % 2 != 0
    kernel[odd] = 2.0 / (np.pi * offsets[odd])
    return np.fft.fft(kernel)


def hilbert_s(row, pad_factor=8, decay_tol=1e-8):
    """Hilbert transform (1/pi) p.v. integral of g(y)/(x - y) along the last axis.

    >>> hilbert_s(np.zeros(9)).tolist() == [0.0] * 9
    True
    """
    row = np.asarray(row, dtype=float)
    if pad_factor < 2:
        raise ValueError(f"pad_factor must be at least 2, got {pad_factor}")
    size = row.shape[-1]
    peak = np.max(np.abs(row)) if row.size else 0.0
    if peak == 0.0:
        return np.zeros_like(row)
    if decay_tol is not None:
        ends = np.max(np.abs(row[..., [0, -1]]))
        if ends > decay_tol * peak:
            raise NonDecayingRow(
                f"Row end values {ends:.3e} exceed {decay_tol:g} of the peak {peak:.3e}"
            )
    padded = max(pad_factor * size, 2 * size)
    spectrum = np.fft.fft(row, n=padded, axis=-1) * _line_kernel_spectrum(padded)
    return np.real(np.fft.ifft(spectrum, axis=-1))[..., :size]


def s_derivative(row, spacing=1.0):
    """Fourth-order finite-difference derivative along the last axis.

    >>> s_derivative(np.arange(7.0)).tolist()
    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
    """
    row = np.asarray(row, dtype=float)
    if row.shape[-1] < 5:
        raise ValueError("s_derivative needs at least 5 samples")
    out = np.empty_like(row)
    out[..., 2:-2] = (row[..., :-4] - 8.0 * row[..., 1:-3] + 8.0 * row[..., 3:-1] - row[..., 4:]) / 12.0
    head = row[..., :5]
    tail = row[..., -5:]
    out[..., 0] = (-25.0 * head[..., 0] + 48.0 * head[..., 1] - 36.0 * head[..., 2]
                   + 16.0 * head[..., 3] - 3.0 * head[..., 4]) / 12.0
    out[..., 1] = (-3.0 * head[..., 0] - 10.0 * head[..., 1] + 18.0 * head[..., 2]
                   - 6.0 * head[..., 3] + head[..., 4]) / 12.0
    out[..., -1] = (25.0 * tail[..., 4] - 48.0 * tail[..., 3] + 36.0 * tail[..., 2]
                    - 16.0 * tail[..., 1] + 3.0 * tail[..., 0]) / 12.0
    out[..., -2] = (3.0 * tail[..., 4] + 10.0 * tail[..., 3] - 18.0 * tail[..., 2]
                    + 6.0 * tail[..., 1] - tail[..., 0]) / 12.0
    return out / spacing


class FilteredSinogram:
    """Rows d/ds H(I_theta f) ready for backprojection."""

    def __init__(self, sinogram, values):
        self.sinogram = sinogram
        self.values = values

    @property
    def theta(self):
        """Angle grid."""
        return self.sinogram.theta

    @property
    def s(self):
        """s-grid."""
        return self.sinogram.s

    def row_at(self, index, s):
        """Filtered row ``index`` interpolated at s."""
        return np.interp(s, self.sinogram.s, self.values[index])


def filter_sinogram(sinogram, pad_factor=8, decay_tol=1e-8):
    """Apply the Hilbert transform and the s-derivative to every row."""
    transformed = hilbert_s(sinogram.values, pad_factor=pad_factor, decay_tol=decay_tol)
    return FilteredSinogram(sinogram, s_derivative(transformed, sinogram.s_spacing))
