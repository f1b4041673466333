"""
Independent ground truths
=========================

* ``classical_fbp``: Ram-Lak filtered backprojection over straight lines,
  for sinograms of the constant field with height labels.
* ``green_solution_u``: the complexified transport solution of the
  constant field written through its explicit Green's function.
* ``plemelj_check``: boundary values of that solution against
  ``D_theta f - (i / 2) H(I_theta f)``.
* ``truncated_cauchy_hilbert``: closed-form Hilbert transform of a cut-off
  Cauchy profile.

None of them goes through the chart, the Hilbert filter of the
reconstruction or the Poisson-kernel backprojection, so agreement is a
real cross-check.
"""

import logging

import numpy as np
from scipy.integrate import quad
from numpy.polynomial.legendre import leggauss

from .errors import QuadratureSingular
from .transforms import hilbert_s
from .utils import complex_pair, parallel_map


logger = logging.getLogger("complexray")

SINGULAR_RATIO = 1e-10


def classical_fbp(sino, grid):
    """Ram-Lak filtered backprojection of a constant-field sinogram onto the grid."""
    labeling = sino.metadata.get('labeling', 'height')
    if labeling != 'height':
        raise ValueError(f"Classical backprojection needs height labels, sinogram uses {labeling!r}")
    size = len(sino.s)
    spacing = sino.s_spacing
    offsets = np.arange(-(size - 1), size)
    kernel = np.zeros(offsets.shape)
    kernel[offsets == 0] = 1.0 / (4.0 * spacing ** 2)
    odd = offsets % 2 != 0
    kernel[odd] = -1.0 / (np.pi ** 2 * offsets[odd] ** 2 * spacing ** 2)
    points = grid.points
    total = np.zeros(points.shape)
    for theta, row in zip(sino.theta, sino.values):
        filtered = spacing * np.convolve(row, kernel)[size - 1:2 * size - 1]
        total += np.interp(np.imag(points * np.exp(-1j * theta)), sino.s, filtered)
    result = grid.fill(0.5 * total * sino.theta_spacing)
    result.metadata.update(kind='classical_fbp')
    return result


class ExplicitChart:
    """Closed-form complexified chart s(z, lam), t(z, lam) and its Jacobian."""

    def __init__(self, s, t, jacobian, name):
        self.s = s
        self.t = t
        self.jacobian = jacobian
        self.name = name

    def __repr__(self):
        return f"<ExplicitChart {self.name}>"


def unit_field_chart():
    """Chart of the constant field mu = 1.

    >>> chart = unit_field_chart()
    >>> round(chart.s(0.3 + 0.4j, 1.0).real, 12), round(chart.t(0.3 + 0.4j, 1.0).real, 12)
    (0.4, 0.3)
    """
    return ExplicitChart(
        s=lambda z, lam: (z / lam - lam * np.conj(z)) / 2j,
        t=lambda z, lam: (z / lam + lam * np.conj(z)) / 2.0,
        jacobian=lambda z, lam: 0.5j * np.ones_like(np.asarray(z, dtype=complex)),
        name='constant',
    )


def _radial_interval(z, direction, radius):
    """Part of the ray z - rho * direction, rho >= 0, inside |w| <= radius."""
    projection = np.real(np.conj(z) * direction)
    discriminant = projection ** 2 - abs(z) ** 2 + radius ** 2
    if discriminant <= 0:
        return None
    root = np.sqrt(discriminant)
    lower, upper = max(projection - root, 0.0), projection + root
    if upper <= lower:
        return None
    return lower, upper


def _break_points(chart, z, lam, probe=1e-3, nodes=720):
    phi = 2.0 * np.pi * np.arange(nodes) / nodes
    sources = z - probe * np.exp(1j * phi)
    ratio = np.abs(chart.s(z, lam) - chart.s(sources, lam)) / probe
    if ratio.min() < SINGULAR_RATIO:
        raise QuadratureSingular(
            f"s(z, lam) - s(z0, lam) vanishes near z={z}, lam={lam}; the kernel is not integrable"
        )
    minima = (ratio < np.roll(ratio, 1)) & (ratio <= np.roll(ratio, -1))
    return sorted(float(angle) for angle in phi[minima] if 0.0 < angle < 2.0 * np.pi)


def green_solution_u(f, chart, z, lam, radial_nodes=400):
    """u(z, lam) as the area integral of the Green's function against f.

    The integral is written in polar coordinates about z, where the area
    element cancels the 1/|z - z0| singularity of the kernel.
    """
    z, lam = complex(z), complex(lam)
    if not 0.0 < abs(lam) < 1.0:
        raise ValueError(f"lam must lie in the punctured unit disc, got {lam}")
    if f.is_zero:
        return 0j
    nodes, weights = leggauss(radial_nodes)
    s_center = chart.s(z, lam)
    cache = {}

    def angular(phi):
        if phi in cache:
            return cache[phi]
        direction = np.exp(1j * phi)
        interval = _radial_interval(z, direction, f.support_radius)
        value = 0j
        if interval is not None:
            lower, upper = interval
            rho = 0.5 * (upper - lower) * nodes + 0.5 * (upper + lower)
            sources = z - rho * direction
            difference = s_center - chart.s(sources, lam)
            integrand = chart.jacobian(sources, lam) * f.evaluate(sources) * rho / difference
            value = 0.5 * (upper - lower) * np.sum(weights * integrand)
        cache[phi] = value
        return value

    points = _break_points(chart, z, lam)
    options = {'points': points or None, 'limit': 400, 'epsabs': 1e-11, 'epsrel': 1e-10}
    real, _ = quad(lambda phi: angular(phi).real, 0.0, 2.0 * np.pi, **options)
    imag, _ = quad(lambda phi: angular(phi).imag, 0.0, 2.0 * np.pi, **options)
    return -lam / np.pi * complex(real, imag)


def line_integral(f, theta, s, nodes=512):
    """I_theta f(s) along the straight line {e^{i theta}(x + i s)} by Gauss-Legendre."""
    x, weights = leggauss(nodes)
    radius = f.support_radius
    points = np.exp(1j * theta) * (radius * x[None, :] + 1j * np.asarray(s, dtype=float)[:, None])
    return radius * np.sum(weights * f.evaluate(points), axis=1)


def straight_beam(f, theta, z):
    """D_theta f(z) for the constant field by adaptive quadrature."""
    zeta = complex(z) * np.exp(-1j * theta)
    phase = np.exp(1j * theta)
    limit = f.support_radius

    def profile(x):
        return float(f.evaluate(phase * complex(x, zeta.imag)))

    upstream = quad(profile, -limit, min(max(zeta.real, -limit), limit), epsabs=1e-13, limit=200)[0]
    downstream = quad(profile, min(max(zeta.real, -limit), limit), limit, epsabs=1e-13, limit=200)[0]
    return 0.5 * (upstream - downstream)


def hilbert_line_integral(f, theta, s_values, n_s=2049, half_width=2.0):
    """H(I_theta f) at s_values from a finely sampled line-integral row."""
    grid = np.linspace(-half_width, half_width, n_s)
    row = line_integral(f, theta, grid)
    return np.interp(s_values, grid, hilbert_s(row))


def truncated_cauchy_hilbert(s, edge):
    """Hilbert transform of 1 / (1 + y^2) cut off to |y| <= edge.

    .. code-block:: text

        (log|(s + edge) / (s - edge)| + 2 s atan(edge)) / (pi (1 + s^2))

    >>> round(float(truncated_cauchy_hilbert(1.0, 1e12)), 12)
    0.5
    """
    s = np.asarray(s, dtype=float)
    return (np.log(np.abs((s + edge) / (s - edge))) + 2.0 * s * np.arctan(edge)) / (np.pi * (1.0 + s ** 2))


def plemelj_check(f, theta, z_samples, r_list=(0.9, 0.99, 0.999), chart=None, threads=1):
    """Compare e^{-i theta} u(z, r e^{i theta}) with D_theta f(z) - (i/2) H(I_theta f)(s(z e^{-i theta}))."""
    chart = chart or unit_field_chart()
    z_samples = [complex(z) for z in np.atleast_1d(np.asarray(z_samples, dtype=complex))]
    heights = np.array([np.imag(z * np.exp(-1j * theta)) for z in z_samples])
    hilbert_values = hilbert_line_integral(f, theta, heights) if not f.is_zero else np.zeros(len(z_samples))
    targets = [
        straight_beam(f, theta, z) - 0.5j * value
        for z, value in zip(z_samples, hilbert_values)
    ]
    jobs = [(z, target, r) for r in r_list for z, target in zip(z_samples, targets)]

    def evaluate(job):
        z, target, r = job
        lam = r * np.exp(1j * theta)
        boundary = np.exp(-1j * theta) * green_solution_u(f, chart, z, lam)
        return {
            'z': complex_pair(z),
            'r': r,
            'u_re': boundary.real,
            'u_im': boundary.imag,
            'rhs_re': target.real,
            'rhs_im': target.imag,
            'dev': abs(boundary - target),
        }

    samples = parallel_map(evaluate, jobs, threads)
    deviations = [max(sample['dev'] for sample in samples if sample['r'] == r) for r in r_list]
    trend_ok = all(later < earlier for earlier, later in zip(deviations, deviations[1:])) or max(deviations) == 0
    logger.info("Plemelj check at theta=%.4f: deviations %s", theta, ', '.join(f"{dev:.3e}" for dev in deviations))
    return {
        'theta': theta,
        'samples': samples,
        'max_deviation': {f"{r:g}": dev for r, dev in zip(r_list, deviations)},
        'trend_ok': bool(trend_ok),
    }
