"""Independent ground truth tests."""

import numpy as np
import pytest

from complexray.field import constant_field
from complexray.flow import build_chart
from complexray.oracle import (
    classical_fbp, green_solution_u, line_integral, plemelj_check, straight_beam, unit_field_chart,
)
from complexray.reconstruct import ScalarGrid
from complexray.transforms import Phantom, ray_transform


@pytest.fixture
def gaussian():
    """Centred bump whose line integrals are known in closed form."""
    return Phantom([(0j, 1.0, 0.2)], support_radius=0.9, name='gaussian')


def test_line_integral_of_gaussian(gaussian):
    """Integral of exp(-(x^2 + s^2) / w^2) over x is w sqrt(pi) exp(-s^2 / w^2)."""
    s = np.linspace(-0.6, 0.6, 13)
    expected = 0.2 * np.sqrt(np.pi) * np.exp(-s ** 2 / 0.04)
    for theta in (0.0, 1.3):
        np.testing.assert_allclose(line_integral(gaussian, theta, s), expected, atol=1e-5)


def test_straight_beam_is_odd_along_the_line(gaussian):
    """Symmetric bump: D f vanishes at the centre and changes sign across it."""
    assert straight_beam(gaussian, 0.7, 0j) == pytest.approx(0.0, abs=1e-10)
    ahead = straight_beam(gaussian, 0.0, 0.1 + 0.05j)
    behind = straight_beam(gaussian, 0.0, -0.1 + 0.05j)
    assert ahead == pytest.approx(-behind, abs=1e-10)
    assert ahead > 0


def test_classical_fbp_needs_height_labels(gaussian):
    """Straight-line geometry is only known for height labels."""
    chart = build_chart(constant_field(), n_curves=16, labeling='arclength')
    sino = ray_transform(gaussian, constant_field(), chart, 4, 9)
    with pytest.raises(ValueError):
        classical_fbp(sino, ScalarGrid(8))


def test_classical_fbp_reproduces_gaussian():
    """Ram-Lak backprojection of closed-form line integrals."""
    wide = Phantom([(0j, 1.0, 0.3)], support_radius=0.9, name='wide-gaussian')
    chart = build_chart(constant_field(), n_curves=32)
    sino = ray_transform(wide, constant_field(), chart, 64, 129)
    grid = ScalarGrid(16, 0.8)
    estimate = classical_fbp(sino, grid)
    truth = grid.sample(wide.evaluate)
    assert np.max(np.abs(estimate.values[grid.mask] - truth.values[grid.mask])) <= 2e-2
    assert estimate.metadata['kind'] == 'classical_fbp'


def test_green_solution_arguments(gaussian):
    """lam lies in the punctured disc; a zero phantom gives zero."""
    chart = unit_field_chart()
    with pytest.raises(ValueError):
        green_solution_u(gaussian, chart, 0.1, 1.0)
    with pytest.raises(ValueError):
        green_solution_u(gaussian, chart, 0.1, 0.0)
    assert green_solution_u(Phantom([(0j, 0.0, 0.2)]), chart, 0.1, 0.5) == 0


def test_plemelj_boundary_values():
    """Deviation from the boundary combination shrinks as r approaches one."""
    phantom = Phantom([(0.1 + 0.1j, 1.0, 0.25)], support_radius=0.9, name='single')
    report = plemelj_check(phantom, 0.3, [0.05 - 0.1j])
    assert report['trend_ok']
    assert report['max_deviation']['0.999'] <= 5e-2
    assert [sample['r'] for sample in report['samples']] == [0.9, 0.99, 0.999]


def test_green_solution_conjugate_symmetry():
    """Real lam and a phantom symmetric about the real axis give u(conj z) = conj u(z)."""
    phantom = Phantom([(0.2, 1.0, 0.3), (-0.1, 0.5, 0.25)], support_radius=0.9, name='mirror')
    chart = unit_field_chart()
    for z in (0.1 + 0.2j, -0.3 - 0.35j):
        upper = green_solution_u(phantom, chart, z, 0.5)
        lower = green_solution_u(phantom, chart, np.conj(z), 0.5)
        assert lower == pytest.approx(np.conj(upper), abs=1e-8)
