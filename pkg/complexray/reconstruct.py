"""
Explicit inversion
==================

The phantom is recovered pixel by pixel as

.. code-block:: text

    f(z) = (1 / 2) * sum_j K_j(z) T_j(z) / sum_j K_j(z),
    K_j(z) = P(lambda_i(z), theta_j) / W_z(e^{i theta_j})

where ``P`` is the Poisson kernel of the unit disc, ``lambda_i(z)`` the
interior root of the complexified coefficient, ``T_j`` the orthogonal
field of the rotated field applied to the Hilbert-filtered sinogram row,
and ``W_z`` the disc weight of :func:`complexray.complexify.absorbed_roots`.
For a constant field ``lambda_i = 0``, ``P = 1``, ``W = 1`` and the
formula is classical filtered backprojection.

Reconstructions are written as:

* ``<name>.csv``: row-major values, top row at y = -1, ``nan`` outside the mask;
* ``<name>.json``: grid size, mask radius and provenance;
* ``<name>.pgm``: binary 8-bit quick-look image, top row at y = +1.
"""

import os
import csv
import heapq
import logging

import numpy as np

from .complexify import (
    absorbed_roots, disc_weight, find_lambda_i, hness_check, interior_roots, orthogonal_coeffs,
)
from .errors import ImaginaryResidual, KernelBlowup, NoInteriorRoot
from .flow import build_chart
from .transforms import filter_sinogram, ray_transform
from .utils import disc_samples, parallel_map, read_json, stage, write_json


logger = logging.getLogger("complexray")

KERNEL_EDGE = 1.0 - 1e-12
RESIDUAL_RTOL = 1e-6
RESIDUAL_ATOL = 1e-14


def poisson_kernel(lam, theta):
    """(1 - |lam|^2) / |1 - e^{-i theta} lam|^2.

    >>> float(poisson_kernel(0.5, 0.0))
    3.0
    >>> float(poisson_kernel(0.0, 1.234))
    1.0
    """
    lam = np.asarray(lam, dtype=complex)
    if np.any(np.abs(lam) >= KERNEL_EDGE):
        raise KernelBlowup(f"Poisson kernel needs |lambda| < 1, got max {np.max(np.abs(lam)):.15f}")
    theta = np.asarray(theta, dtype=float)
    return (1.0 - np.abs(lam) ** 2) / np.abs(1.0 - np.exp(-1j * theta) * lam) ** 2


class ScalarGrid:
    """Values on an n x n grid over [-1, 1]^2, NaN outside the disc mask."""

    def __init__(self, n, mask_radius=0.95, values=None, metadata=None):
        if n < 2:
            raise ValueError(f"Grid size must be at least 2, got {n}")
        self.n = int(n)
        self.mask_radius = float(mask_radius)
        self.metadata = dict(metadata or {})
        axis = np.linspace(-1.0, 1.0, self.n)
        self.z = axis[None, :] + 1j * axis[:, None]
        self.mask = np.abs(self.z) <= self.mask_radius
        if values is None:
            values = np.zeros((self.n, self.n))
        values = np.array(values)
        values[~self.mask] = np.nan
        self.values = values

    def __repr__(self):
        return f"<ScalarGrid {self.n}x{self.n} mask={self.mask_radius}>"

    @property
    def spacing(self):
        """Pixel size."""
        return 2.0 / (self.n - 1)

    @property
    def points(self):
        """Masked grid points in row-major order."""
        return self.z[self.mask]

    @property
    def is_complex(self):
        """Whether values are complex."""
        return np.iscomplexobj(self.values)

    def like(self, values, **metadata):
        """Grid with the same geometry and new values."""
        merged = dict(self.metadata)
        merged.update(metadata)
        return ScalarGrid(self.n, self.mask_radius, values, merged)

    def fill(self, masked_values, dtype=float):
        """Grid with masked points set from a flat array."""
        values = np.full((self.n, self.n), np.nan, dtype=dtype)
        values[self.mask] = masked_values
        return self.like(values)

    def sample(self, func):
        """Grid of func evaluated at masked points."""
        return self.fill(func(self.points))

    def save_csv(self, path):
        """Write row-major values with 17 significant digits."""
        with open(path, 'wt', encoding="utf-8", newline='') as fp:
            writer = csv.writer(fp)
            for row in self.values:
                writer.writerow([_format(value) for value in row])
        return path

    def save_json(self, path):
        """Write the metadata sidecar."""
        document = dict(self.metadata)
        document.update(n=self.n, mask_radius=self.mask_radius, complex=self.is_complex)
        write_json(path, document)
        return path

    def save_pgm(self, path):
        """Write an 8-bit binary PGM quick-look, top row at y = +1."""
        values = np.real(self.values)[::-1, :]
        finite = np.isfinite(values)
        image = np.zeros(values.shape, dtype=np.uint8)
        if finite.any():
            low, high = values[finite].min(), values[finite].max()
            if high > low:
                scaled = np.round(255.0 * (values[finite] - low) / (high - low))
                image[finite] = scaled.astype(np.uint8)
        with open(path, 'wb') as fp:
            fp.write(f"P5\n{self.n} {self.n}\n255\n".encode("ascii"))
            fp.write(image.tobytes())
        return path

    def save(self, prefix):
        """Write CSV, JSON sidecar and PGM quick-look; return the paths."""
        return [
            self.save_csv(prefix + '.csv'),
            self.save_json(prefix + '.json'),
            self.save_pgm(prefix + '.pgm'),
        ]

    @classmethod
    def load(cls, path):
        """Read a grid written by :meth:`save_csv` and its sidecar."""
        with open(path, encoding="utf-8", newline='') as fp:
            rows = [[complex(value) for value in row] for row in csv.reader(fp)]
        values = np.array(rows)
        metadata = {}
        sidecar = os.path.splitext(path)[0] + '.json'
        if os.path.exists(sidecar):
            metadata = read_json(sidecar)
        mask_radius = metadata.pop('mask_radius', 0.95)
        is_complex = metadata.pop('complex', False)
        metadata.pop('n', None)
        if not is_complex:
            values = values.real
        return cls(len(values), mask_radius, values, metadata)


def _format(value):
    if isinstance(value, (complex, np.complexfloating)):
        return f"{value.real:.17g}{value.imag:+.17g}j"
    return f"{value:.17g}"


def relative_l2(estimate, truth):
    """Relative L2 error over the mask, 0 when both vanish."""
    difference = np.sum(np.abs(estimate.values[estimate.mask] - truth.values[truth.mask]) ** 2)
    norm = np.sum(np.abs(truth.values[truth.mask]) ** 2)
    if norm == 0.0:
        return 0.0 if difference == 0.0 else float('inf')
    return float(np.sqrt(difference / norm))


def sup_error(estimate, truth):
    """Largest absolute difference over the mask."""
    return float(np.max(np.abs(estimate.values[estimate.mask] - truth.values[truth.mask])))


def _predicted_root(values, grid, pixel, parent):
    """Extrapolate lambda_i to pixel from an assigned neighbour.

    Uses the straight continuation through the next pixel beyond the
    neighbour when that one is assigned, otherwise scales the neighbour's
    root by z / z_parent, which is exact for roots vanishing linearly at
    a collision.
    """
    beyond = (2 * parent[0] - pixel[0], 2 * parent[1] - pixel[1])
    previous = values[parent]
    if 0 <= beyond[0] < grid.n and 0 <= beyond[1] < grid.n and not np.isnan(values[beyond]):
        return 2.0 * previous - values[beyond]
    if grid.z[parent] != 0:
        return previous * grid.z[pixel] / grid.z[parent]
    return previous


def lambda_map(field, grid):
    """lambda_i on the grid, tracked continuously outward from the pixel nearest z = 0.

    Pixels are visited in order of |z|; each takes the interior root closest
    to the value predicted from an already assigned neighbour.
    """
    values = np.full((grid.n, grid.n), np.nan, dtype=complex)
    distance = np.where(grid.mask, np.abs(grid.z), np.inf)
    start = np.unravel_index(int(np.argmin(distance)), distance.shape)
    values[start] = find_lambda_i(field, grid.z[start])
    visited = np.zeros(grid.mask.shape, dtype=bool)
    visited[start] = True
    frontier = []
    missing = 0

    def push_neighbours(pixel):
        row, col = pixel
        for step_row, step_col in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            neighbour = (row + step_row, col + step_col)
            if not (0 <= neighbour[0] < grid.n and 0 <= neighbour[1] < grid.n):
                continue
            if visited[neighbour] or not grid.mask[neighbour]:
                continue
            visited[neighbour] = True
            heapq.heappush(frontier, (distance[neighbour], neighbour, pixel))

    push_neighbours(start)
    while frontier:
        _, pixel, parent = heapq.heappop(frontier)
        push_neighbours(pixel)
        candidates = interior_roots(field, grid.z[pixel])
        if not candidates:
            missing += 1
            continue
        if np.isnan(values[parent]):
            values[pixel] = candidates[0]
            continue
        predicted = _predicted_root(values, grid, pixel, parent)
        values[pixel] = min(candidates, key=lambda lam: abs(lam - predicted))
    if missing:
        logger.warning("No interior root at %d grid points; they reconstruct as NaN.", missing)
    return grid.like(values, kind='lambda_i', field=field.name)


def _orthogonal_derivative(field, chart, points, theta):
    """X_perp_theta applied to s(z e^{-i theta}) as a complex array (real up to round-off)."""
    along, across = orthogonal_coeffs(field, points, theta, chart)
    phase = np.exp(-1j * theta)
    ds, dbar_s = chart.grad_s(points * phase)
    return along * phase * ds + across * np.conj(phase) * dbar_s


def filtered_term(sino, chart, field, z, theta_index, residual=None):
    """d/ds H(I_theta f)(s(z e^{-i theta})) times X_perp_theta s(z e^{-i theta}).

    ``sino`` is a sinogram or its filtered rows. The largest imaginary
    part dropped is stored under ``residual['max']`` when a dict is passed.
    """
    filtered = sino if hasattr(sino, 'row_at') else filter_sinogram(sino)
    points = np.atleast_1d(np.asarray(z, dtype=complex))
    theta = filtered.theta[theta_index]
    s_values = chart.s_of_z(points * np.exp(-1j * theta))
    term = filtered.row_at(theta_index, s_values) * _orthogonal_derivative(field, chart, points, theta)
    imaginary = np.abs(term.imag)
    limit = RESIDUAL_RTOL * np.abs(term.real) + RESIDUAL_ATOL
    if np.any(imaginary > limit):
        worst = int(np.argmax(imaginary - limit))
        raise ImaginaryResidual(
            f"Orthogonal derivative has imaginary part {imaginary[worst]:.3e} "
            f"at z={points[worst]}, theta={theta:.6f}"
        )
    if residual is not None:
        residual['max'] = float(imaginary.max()) if imaginary.size else 0.0
    if np.ndim(z) == 0:
        return float(term.real[0])
    return term.real


def absorbed_root_table(field, points, roots):
    """Absorbed roots per point as rows padded with zeros.

    Returns the table and a copy of ``roots`` with NaN where the pole at
    the origin cannot be cancelled.
    """
    roots = np.array(roots, dtype=complex)
    table = np.zeros((len(points), field.rescaling_power), dtype=complex)
    if not field.rescaling_power:
        return table, roots
    missing = 0
    for index, (point, root) in enumerate(zip(points, roots)):
        if np.isnan(root):
            continue
        try:
            table[index] = absorbed_roots(field, point, root)
        except NoInteriorRoot:
            roots[index] = np.nan
            missing += 1
    if missing:
        logger.warning("Too few interior zeros to cancel the pole at %d grid points; they reconstruct as NaN.",
                       missing)
    return table, roots


def backproject(sino, chart, field, grid, threads=1, lambdas=None):
    """Poisson-weighted backprojection of the filtered sinogram onto the grid.

    Each angle is weighted by ``P(lambda_i, theta) / W(e^{i theta})`` and the
    sum is normalised by the mean of the same weight over the angles. For
    fields with ``k_mu >= -1`` the weight is ``W = 1`` and the mean of
    ``P`` is one, which leaves the plain ``1 / (4 pi)`` prefactor.
    """
    filtered = sino if hasattr(sino, 'row_at') else filter_sinogram(sino)
    if lambdas is None:
        lambdas = lambda_map(field, grid)
    points = grid.points
    absorbed, roots = absorbed_root_table(field, points, lambdas.values[grid.mask])
    valid = ~np.isnan(roots)

    def contribution(index):
        theta = filtered.theta[index]
        residual = {}
        term = filtered_term(filtered, chart, field, points, index, residual)
        kernel = np.ones(points.shape)
        kernel[valid] = poisson_kernel(roots[valid], theta)
        kernel = kernel / disc_weight(absorbed, theta)
        return kernel * term, kernel, residual['max']

    results = parallel_map(contribution, range(len(filtered.theta)), threads)
    total = np.zeros(points.shape)
    mass = np.zeros(points.shape)
    residual = 0.0
    for values, kernel, angle_residual in results:
        total += values
        mass += kernel
        residual = max(residual, angle_residual)
    total = 0.5 * total / mass
    total[~valid] = np.nan
    logger.info("Backprojected %d angles onto %d pixels, imaginary residual %.3e.",
                len(filtered.theta), points.size, residual)
    result = grid.fill(total)
    result.metadata.update(kind='reconstruction', field=field.name, imaginary_residual=residual)
    return result


def reconstruct_end_to_end(phantom, field, config, timings=None, artifacts=None):
    """Forward-project the phantom, invert, and compare with the phantom on the grid.

    Intermediate products (sinogram, chart, lambda map, sampled phantom)
    are stored in ``artifacts`` when a dict is passed.
    """
    timings = {} if timings is None else timings
    artifacts = {} if artifacts is None else artifacts
    with stage('hness', timings):
        report = hness_check(field, disc_samples(config.hness_samples, seed=config.seed, radius=config.mask),
                             quad_n=config.quad_n, threads=config.threads)
    with stage('chart', timings):
        chart = build_chart(field, config.n_curves, config.labeling, config.threads)
    with stage('ray_transform', timings):
        sino = ray_transform(phantom, field, chart, config.n_theta, config.n_s, config.threads)
    with stage('filter', timings):
        filtered = filter_sinogram(sino)
    grid = ScalarGrid(config.n, config.mask)
    with stage('lambda_map', timings):
        lambdas = lambda_map(field, grid)
    with stage('backproject', timings):
        estimate = backproject(filtered, chart, field, grid, config.threads, lambdas)
    truth = grid.sample(phantom.evaluate)
    error = {
        'field': field.name,
        'phantom': phantom.name,
        'relative_l2': relative_l2(estimate, truth),
        'sup_error': sup_error(estimate, truth),
        'imaginary_residual': estimate.metadata['imaginary_residual'],
        'hness': report.verdict,
        'certification': report.certification,
        'timings': timings,
    }
    logger.info("Reconstruction of %s over %s: relative L2 %.3e, sup %.3e (%s).",
                phantom.name, field.name, error['relative_l2'], error['sup_error'], error['certification'])
    artifacts.update(sinogram=sino, lambda_map=lambdas, chart=chart, truth=truth)
    return estimate, error
