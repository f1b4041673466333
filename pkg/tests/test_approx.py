"""Frequency truncation and stability tests."""

import os

import numpy as np
import pytest

from complexray.approx import (
    GeometricFieldSpec, c_hat_test, choose_truncation, load_analytic, lq_distance,
    nested_windows, project_Pkl, reference_truncation, stability_report, write_stability_csv,
)
from complexray.errors import EmptyWindow, InsufficientNonzeroPairs
from complexray.field import PolyField, quadratic_field
from complexray.utils import disc_samples, write_json
from .utils import temp_dir


def test_projection_keeps_window():
    """Exactly the a_pq with k <= q - p <= l and p + q <= N survive."""
    spec = GeometricFieldSpec(0.3)
    field = project_Pkl(spec, -1, 1, 3)
    assert set(field.coeffs) == {(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (1, 2)}
    assert field.coeffs[(2, 1)] == pytest.approx(0.027)
    assert field.metadata['tail_bound'] > 0


def test_projection_of_polynomial_is_exact():
    """A window holding every coefficient reproduces the field with a zero tail."""
    field = PolyField({(0, 0): 1.0, (2, 0): 0.3, (1, 2): 0.1})
    projected = project_Pkl(field, -2, 1, 3)
    assert projected == field
    assert projected.metadata['tail_bound'] == 0.0


def test_projection_arguments():
    """k <= l and a nonempty result."""
    with pytest.raises(ValueError):
        project_Pkl(quadratic_field(0.3), 1, 0, 4)
    with pytest.raises(EmptyWindow):
        project_Pkl(PolyField({(0, 0): 1.0, (2, 0): 0.3}), 1, 2, 4)


def test_geometric_tail_bounds_coefficients():
    """tail(N) dominates the sum of |a_pq| over p + q > N."""
    for support in ('full', 'holomorphic'):
        spec = GeometricFieldSpec(0.4, support)
        everything = spec.coefficients(200)
        for degree in (0, 3, 10):
            excluded = sum(abs(value) for (p, q), value in everything.items() if p + q > degree)
            assert spec.tail(degree) >= excluded * (1 - 1e-12)
            assert spec.tail(degree) == pytest.approx(excluded, rel=1e-9)


def test_analytic_field_file():
    """Geometric family is read from JSON."""
    with temp_dir() as tmp_dir:
        path = os.path.join(tmp_dir, 'analytic.json')
        write_json(path, {'family': 'geometric', 'beta': 0.25, 'support': 'holomorphic', 'base': [1.0, 0.0]})
        spec = load_analytic(path)
        assert spec.coefficient(2, 0) == pytest.approx(0.0625)
        assert spec.coefficient(1, 1) == 0
        write_json(path, {'family': 'bessel', 'beta': 0.25})
        with pytest.raises(ValueError):
            load_analytic(path)
    with pytest.raises(ValueError):
        GeometricFieldSpec(1.5)


def test_nested_windows():
    """Windows grow alternately to the left and to the right."""
    assert list(nested_windows(1)) == [(0, 0), (-1, 0), (-1, 1)]


def test_projection_is_idempotent():
    """Projecting twice onto the same window changes nothing."""
    once = project_Pkl(GeometricFieldSpec(0.3), -2, 1, 6)
    twice = project_Pkl(once, -2, 1, 6)
    assert twice.coeffs == once.coeffs
    assert twice.metadata['tail_bound'] == 0.0


def test_nested_window_tails_shrink():
    """Each window of the nested sequence discards no more than the one before."""
    spec = GeometricFieldSpec(0.3)
    tails = [project_Pkl(spec, k, l, 8).metadata['tail_bound'] for k, l in nested_windows(4)]
    assert all(later <= earlier + 1e-15 for earlier, later in zip(tails, tails[1:]))
    assert tails[-1] < tails[0]


def test_truncation_meets_tolerance():
    """Sup of the discarded part is below eps and the window only grows as eps shrinks."""
    spec = GeometricFieldSpec(0.3)
    samples = disc_samples(32, seed=0, radius=0.95)
    previous = None
    for eps in (0.1, 0.01, 0.001):
        truncation = choose_truncation(spec, eps, samples)
        assert truncation.tail <= eps
        exact = np.array([sum(spec.coefficient(p, q) * z ** p * np.conj(z) ** q
                              for (p, q) in spec.coefficients(spec.reference_degree()))
                          for z in samples])
        assert np.max(np.abs(exact - truncation.field.evaluate(samples))) <= eps
        if previous is not None:
            assert truncation.k <= previous.k and truncation.l >= previous.l
            assert truncation.degree >= previous.degree
        previous = truncation


def test_truncation_of_admissible_polynomial():
    """Admissible polynomial fields are their own truncation."""
    truncation = choose_truncation(quadratic_field(0.3), 0.01, disc_samples(16, seed=0))
    assert truncation.field == quadratic_field(0.3)
    assert (truncation.k, truncation.l, truncation.tail) == (-2, 0, 0.0)
    with pytest.raises(ValueError):
        choose_truncation(quadratic_field(0.3), 0.0, [0.5])


def test_c_hat_test():
    """Geometric coefficients decay with ratio beta |z| < 1."""
    samples = disc_samples(8, seed=2, radius=0.9)
    report = c_hat_test(GeometricFieldSpec(0.3), samples)
    assert report['verdict'] == "pass"
    assert report['label'] == "empirical"
    assert all(record['tail_sup'] < 0.95 for record in report['samples'])
    assert c_hat_test(quadratic_field(0.3), samples)['verdict'].startswith("not applicable")
    with pytest.raises(InsufficientNonzeroPairs):
        c_hat_test(GeometricFieldSpec(0.3, 'holomorphic'), [0.5], j_max=3)
    with pytest.raises(ValueError):
        c_hat_test(GeometricFieldSpec(0.3), [0j])


def test_lq_distance():
    """Discrete L^q norm with cell weights."""
    first, second = np.ones((2, 3)), np.zeros((2, 3))
    assert lq_distance(first, second, 1.0, 0.5, 0.5) == pytest.approx(1.5)
    assert lq_distance(first, second, 2.0, 0.5, 0.5) == pytest.approx(np.sqrt(1.5))
    assert lq_distance(first, second, np.inf, 0.5, 0.5) == 1.0


def test_stability_report(wide_phantom, small_config):
    """Distances shrink with eps; the CSV has one row per eps."""
    config = small_config.replace(n=16, n_theta=32, n_s=65, n_curves=32)
    report = stability_report(GeometricFieldSpec(0.3), wide_phantom, (0.1, 0.01), (1.0, 2.0), config)
    assert [entry['epsilon'] for entry in report['entries']] == [0.1, 0.01]
    assert report['q'] == ['1', '2', 'inf']
    assert report['reference_tail'] <= 1e-5
    first, second = report['entries']
    assert second['sino_distance']['inf'] <= first['sino_distance']['inf']
    assert first['sino_distance']['inf'] <= report['constant'] * 0.1 + 1e-15
    with temp_dir() as tmp_dir:
        path = write_stability_csv(report, os.path.join(tmp_dir, 'stability.csv'))
        with open(path, encoding='utf-8') as fp:
            lines = fp.read().splitlines()
    assert lines[0].startswith('epsilon,k,l,N,dist_1,dist_2,dist_inf')
    assert len(lines) == 3


def test_reference_keeps_every_frequency():
    """Reference degree is the first whose tail is below the fidelity."""
    spec = GeometricFieldSpec(0.3)
    reference = reference_truncation(spec, 1e-5)
    assert reference.tail <= 1e-5 < spec.tail(reference.degree - 1)
    assert (reference.k, reference.l) == (-reference.degree, reference.degree)
    assert reference.field.coeffs == pytest.approx(spec.coefficients(reference.degree))
    assert reference_truncation(quadratic_field(0.3), 1e-9).field == quadratic_field(0.3)
    with pytest.raises(ValueError):
        reference_truncation(spec, 0.0)
