"""Backprojection and reconstruction tests."""

import os

import numpy as np
import pytest

from complexray.errors import KernelBlowup
from complexray.field import constant_field, quadratic_field
from complexray.flow import build_chart
from complexray.oracle import classical_fbp
from complexray.reconstruct import (
    ScalarGrid, backproject, filtered_term, lambda_map, poisson_kernel, reconstruct_end_to_end, relative_l2,
    sup_error,
)
from complexray.transforms import Phantom, filter_sinogram, ray_transform
from .utils import temp_dir


@pytest.fixture
def centred_phantom():
    """Two bumps well inside the flat part of the cutoff."""
    return Phantom([(0.15 + 0.1j, 1.0, 0.25), (-0.2 - 0.15j, 0.6, 0.25)], support_radius=0.9, name='centred')


def test_poisson_kernel_averages_to_one():
    """Mean of P(lam, theta) over a full turn is one."""
    theta = 2 * np.pi * np.arange(256) / 256
    for lam in (0.0, 0.5, -0.3 + 0.6j):
        assert np.mean(poisson_kernel(lam, theta)) == pytest.approx(1.0, abs=1e-12)
    assert np.all(poisson_kernel(0.9j, theta) > 0)


def test_poisson_kernel_needs_interior_root():
    """|lam| = 1 is rejected."""
    with pytest.raises(KernelBlowup):
        poisson_kernel(1.0, 0.0)


def test_grid_mask():
    """Values outside the mask are NaN; sample fills the inside."""
    grid = ScalarGrid(16, 0.9)
    assert np.isnan(grid.values[0, 0])
    sampled = grid.sample(np.abs)
    np.testing.assert_allclose(sampled.values[grid.mask], np.abs(grid.points))
    assert np.all(np.isnan(sampled.values[~grid.mask]))
    with pytest.raises(ValueError):
        ScalarGrid(1)


def test_grid_files():
    """CSV, sidecar and PGM are written; CSV and sidecar load back."""
    grid = ScalarGrid(16, 0.9, metadata={'kind': 'test'}).sample(lambda z: z.real - 2 * z.imag)
    with temp_dir() as tmp_dir:
        paths = grid.save(os.path.join(tmp_dir, 'grid'))
        restored = ScalarGrid.load(paths[0])
        with open(paths[2], 'rb') as fp:
            image = fp.read()
    np.testing.assert_array_equal(restored.values, grid.values)
    assert restored.mask_radius == 0.9
    assert restored.metadata['kind'] == 'test'
    assert image.startswith(b"P5\n16 16\n255\n")
    assert len(image) == len(b"P5\n16 16\n255\n") + 256


def test_error_measures():
    """Relative L2 and sup error over the mask."""
    grid = ScalarGrid(8, 0.9)
    truth = grid.sample(lambda z: np.ones(z.shape))
    estimate = grid.sample(lambda z: np.full(z.shape, 1.1))
    assert relative_l2(estimate, truth) == pytest.approx(0.1)
    assert sup_error(estimate, truth) == pytest.approx(0.1)
    assert relative_l2(grid, grid) == 0.0


def test_lambda_map_of_quadratic_field():
    """|lambda_i| = sqrt(0.3) |z| with lambda_i / (i sqrt(0.3) z) = +-1."""
    grid = ScalarGrid(24, 0.95)
    lambdas = lambda_map(quadratic_field(0.3), grid)
    points, roots = grid.points, lambdas.values[grid.mask]
    ratio = roots / (1j * np.sqrt(0.3) * points)
    np.testing.assert_allclose(np.abs(np.abs(ratio) - 1.0), 0.0, atol=1e-9)
    np.testing.assert_allclose(np.abs(ratio.real) - 1.0, 0.0, atol=1e-9)
    assert lambdas.metadata['kind'] == 'lambda_i'


def test_constant_field_reconstruction(centred_phantom, small_config):
    """mu = 1 reproduces the phantom and agrees with classical filtered backprojection."""
    artifacts = {}
    estimate, error = reconstruct_end_to_end(centred_phantom, constant_field(), small_config, artifacts=artifacts)
    assert error['relative_l2'] <= 5e-2
    assert error['certification'] == "certified"
    assert error['imaginary_residual'] == 0.0
    classical = classical_fbp(artifacts['sinogram'], ScalarGrid(small_config.n, small_config.mask))
    assert relative_l2(estimate, classical) <= 5e-2
    assert set(error['timings']) == {'hness', 'chart', 'ray_transform', 'filter', 'lambda_map', 'backproject'}


def test_quadratic_field_reconstruction(centred_phantom, small_config):
    """Nontrivial curves at coarse resolution."""
    estimate, error = reconstruct_end_to_end(centred_phantom, quadratic_field(0.3), small_config)
    assert error['relative_l2'] <= 5e-2
    assert error['hness'] == "pass"
    assert error['certification'] == "empirical"
    assert estimate.metadata['kind'] == 'reconstruction'


@pytest.mark.parametrize('centre', [0j, 0.3, 0.3 + 0.3j, -0.35j])
def test_quadratic_field_off_centre_bumps(centre, small_config):
    """Single bump anywhere in the disc is recovered through curved rays."""
    phantom = Phantom([(centre, 1.0, 0.3)], support_radius=0.9, name='bump')
    _, error = reconstruct_end_to_end(phantom, quadratic_field(0.3), small_config)
    assert error['relative_l2'] <= 5e-2


def test_nearly_constant_field_matches_constant_field(centred_phantom, small_config):
    """A tiny quadratic term changes the reconstruction only slightly."""
    flat, _ = reconstruct_end_to_end(centred_phantom, constant_field(), small_config)
    bent, error = reconstruct_end_to_end(centred_phantom, quadratic_field(1e-4), small_config)
    assert relative_l2(bent, flat) <= 5e-3
    assert error['relative_l2'] <= 5e-2


def test_zero_phantom_reconstructs_to_zero(small_config):
    """Empty phantom gives an empty image and zero error."""
    estimate, error = reconstruct_end_to_end(Phantom([(0j, 0.0, 0.2)], name='zero'), constant_field(),
                                             small_config.replace(n=16))
    assert not np.any(estimate.values[estimate.mask])
    assert error['relative_l2'] == 0.0


def _invert(phantom, field, chart, config, grid):
    sino = ray_transform(phantom, field, chart, config.n_theta, config.n_s)
    return backproject(filter_sinogram(sino), chart, field, grid)


def test_reconstruction_is_linear(small_config):
    """Inverting a superposition gives the superposition of the inversions."""
    field = quadratic_field(0.3)
    chart = build_chart(field, small_config.n_curves)
    grid = ScalarGrid(16, small_config.mask)
    first = Phantom([(0.2 + 0.1j, 1.0, 0.3)], support_radius=0.9, name='first')
    second = Phantom([(-0.25 - 0.2j, 1.0, 0.35)], support_radius=0.9, name='second')
    combined = _invert(first + second.scaled(-0.6), field, chart, small_config, grid)
    parts = (_invert(first, field, chart, small_config, grid).values
             - 0.6 * _invert(second, field, chart, small_config, grid).values)
    np.testing.assert_allclose(combined.values[grid.mask], parts[grid.mask], atol=1e-10)


def test_half_turn_equivariance_of_constant_field(small_config):
    """Turning the phantom by pi turns the straight-line reconstruction by pi."""
    field = constant_field()
    chart = build_chart(field, small_config.n_curves)
    grid = ScalarGrid(16, small_config.mask)
    phantom = Phantom([(0.3 + 0.1j, 1.0, 0.3)], support_radius=0.9, name='offset')
    upright = _invert(phantom, field, chart, small_config, grid)
    turned = _invert(phantom.rotated(np.pi), field, chart, small_config, grid)
    np.testing.assert_allclose(turned.values[grid.mask], upright.values[::-1, ::-1][grid.mask], atol=1e-8)


def test_filtered_term_of_radial_phantom_at_origin(small_config):
    """Every angle sees the same filtered value at z = 0 for mu = 1."""
    field = constant_field()
    chart = build_chart(field, small_config.n_curves)
    phantom = Phantom([(0j, 1.0, 0.3)], support_radius=0.9, name='radial')
    filtered = filter_sinogram(ray_transform(phantom, field, chart, 16, small_config.n_s))
    terms = np.array([filtered_term(filtered, chart, field, 0j, index) for index in range(16)])
    np.testing.assert_allclose(terms, terms[0], rtol=1e-6)
    assert terms[0] > 0


def test_lambda_map_is_continuous():
    """Neighbouring pixels never jump between the two roots."""
    grid = ScalarGrid(24, 0.95)
    values = lambda_map(quadratic_field(0.3), grid).values
    bound = 1.0001 * np.sqrt(0.3) * grid.spacing
    for axis in (0, 1):
        assert np.nanmax(np.abs(np.diff(values, axis=axis))) <= bound
