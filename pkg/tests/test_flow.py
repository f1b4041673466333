"""Characteristic curves and flow chart tests."""

import os

import numpy as np
import pytest

from complexray.complexify import orientation, raw_orthogonal_derivative
from complexray.errors import Trapped
from complexray.field import PolyField, constant_field, quadratic_field
from complexray.flow import (
    ATOL, RTOL, LabelMap, build_chart, grad_s, inflow_arcs, s_of_z, t_of_z, trace_curve,
)
from .utils import temp_dir


@pytest.fixture(scope='module')
def straight_chart():
    """Chart of the constant field."""
    return build_chart(constant_field(), n_curves=48)


@pytest.fixture(scope='module')
def quadratic_chart():
    """Chart of mu = 1 + 0.3 z^2."""
    return build_chart(quadratic_field(0.3), n_curves=48, threads=2)


def test_straight_curve_reaches_boundary():
    """mu = 1 moves along +x with unit speed."""
    curve = trace_curve(constant_field(), 0.5j)
    assert abs(curve.end) == pytest.approx(1.0, abs=1e-9)
    assert curve.end == pytest.approx(np.sqrt(0.75) + 0.5j, abs=1e-8)
    assert curve.t_exit == pytest.approx(np.sqrt(0.75), abs=1e-8)
    backward = trace_curve(constant_field(), 0.5j, direction=-1)
    assert backward.start == pytest.approx(-np.sqrt(0.75) + 0.5j, abs=1e-8)


def test_trace_curve_arguments():
    """Direction is +-1 and the start lies in the disc."""
    with pytest.raises(ValueError):
        trace_curve(constant_field(), 0, direction=0)
    with pytest.raises(ValueError):
        trace_curve(constant_field(), 1.5)


def test_trace_curve_time_cap():
    """A curve that cannot leave within t_max is trapped."""
    with pytest.raises(Trapped):
        trace_curve(constant_field(), 0, t_max=0.5)


def test_curve_follows_field():
    """Positions satisfy dz/dt = mu(z)."""
    field = quadratic_field(0.3)
    curve = trace_curve(field, 0.1 + 0.2j)
    times = np.linspace(curve.t[0] + 0.01, curve.t[-1] - 0.01, 9)
    h = 1e-5
    velocity = (curve.position(times + h) - curve.position(times - h)) / (2 * h)
    np.testing.assert_allclose(velocity, field.evaluate(curve.position(times)), atol=1e-4)


def test_rotated_field_rotates_curves():
    """Curves of e^{i theta} mu(e^{-i theta} z) are the curves of mu turned by theta."""
    theta = 0.8
    phase = np.exp(1j * theta)
    rotated = PolyField({(0, 0): phase, (2, 0): 0.3 / phase})
    start = 0.1 + 0.2j
    curve = trace_curve(quadratic_field(0.3), start)
    turned = trace_curve(rotated, phase * start)
    assert turned.t_exit == pytest.approx(curve.t_exit, abs=1e-7)
    times = np.linspace(0.0, curve.t_exit, 7)
    np.testing.assert_allclose(turned.position(times), phase * curve.position(times), atol=1e-7)


def test_halved_tolerances_agree():
    """Tightening the integrator tolerances moves the exit point by less than 1e-7."""
    field = quadratic_field(0.3)
    for start in (0.0, 0.4 - 0.3j, -0.6j):
        loose = trace_curve(field, start)
        tight = trace_curve(field, start, rtol=RTOL / 2, atol=ATOL / 2)
        assert tight.end == pytest.approx(loose.end, abs=1e-7)
        assert tight.t_exit == pytest.approx(loose.t_exit, abs=1e-7)


def test_inflow_arc_of_constant_field():
    """mu = 1 enters through the left half circle."""
    arcs = inflow_arcs(constant_field())
    assert len(arcs) == 1
    assert arcs[0].start == pytest.approx(np.pi / 2, abs=1e-10)
    assert arcs[0].end == pytest.approx(3 * np.pi / 2, abs=1e-10)


def test_label_maps():
    """Height labels are Im of the foot-point, arclength labels are centred."""
    arcs = inflow_arcs(constant_field())
    height = LabelMap(constant_field(), arcs, 'height')
    assert height.label_at_angle(np.pi - 0.3) == pytest.approx(np.sin(0.3))
    assert height.angle_of_label(np.sin(0.3)) == pytest.approx(np.pi - 0.3)
    arclength = LabelMap(constant_field(), arcs, 'arclength')
    low, high = arclength.s_range
    assert (low, high) == (pytest.approx(-np.pi / 2), pytest.approx(np.pi / 2))
    with pytest.raises(ValueError):
        LabelMap(constant_field(), arcs, 'angle')


def test_straight_chart_coordinates(straight_chart):
    """s = Im z and t = Re z + sqrt(1 - (Im z)^2) for mu = 1."""
    z = np.array([0.3 + 0.2j, -0.5 - 0.1j, 0.05j])
    np.testing.assert_allclose(s_of_z(straight_chart, z), z.imag, atol=1e-8)
    np.testing.assert_allclose(t_of_z(straight_chart, z), z.real + np.sqrt(1 - z.imag ** 2), atol=1e-2)
    ds, dbar_s = grad_s(straight_chart, 0.1 + 0.1j)
    assert ds == pytest.approx(-0.5j, abs=1e-6)
    assert dbar_s == pytest.approx(0.5j, abs=1e-6)


def test_back_trace_matches_interpolation(quadratic_chart):
    """Exact back-trace and the chart interpolant agree."""
    for z in (0.2 + 0.3j, -0.4 + 0.1j, 0.1 - 0.6j):
        exact_s, exact_t = quadratic_chart.back_trace(z)
        assert float(quadratic_chart.s_of_z(z)) == pytest.approx(exact_s, abs=1e-2)
        assert float(quadratic_chart.t_of_z(z)) == pytest.approx(exact_t, abs=1e-2)


def test_doubling_curves_keeps_coordinates(quadratic_chart):
    """Charts with 48 and 96 curves agree with each other and with the exact back-trace."""
    finer = build_chart(quadratic_field(0.3), n_curves=96, threads=2)
    z = np.array([0.2 + 0.3j, -0.4 + 0.1j, 0.1 - 0.6j, 0.55 + 0.05j])
    exact = np.array([quadratic_chart.back_trace(point)[0] for point in z])
    np.testing.assert_allclose(finer.s_of_z(z), quadratic_chart.s_of_z(z), atol=1e-2)
    np.testing.assert_allclose(finer.s_of_z(z), exact, atol=1e-2)


def test_s_is_constant_along_curves(quadratic_chart):
    """Every sample of a launched curve carries its label."""
    label = sorted(quadratic_chart.curves)[20]
    curve = quadratic_chart.curves[label]
    _, points = curve.uniform(12)
    inside = points[np.abs(points) < 0.97]
    np.testing.assert_allclose(quadratic_chart.s_of_z(inside), label, atol=5e-3)


def test_orientation_makes_orthogonal_derivative_positive(quadratic_chart):
    """The chosen sign turns X_perp s positive at interior points."""
    sign = orientation(quadratic_chart.field, quadratic_chart)
    for z in (0.0, 0.3 + 0.2j, -0.5j):
        assert sign * raw_orthogonal_derivative(quadratic_chart.field, quadratic_chart, z) > 0


def test_dump_csv(straight_chart):
    """Curve samples are written with a header row."""
    with temp_dir() as tmp_dir:
        path = os.path.join(tmp_dir, 'curves.csv')
        straight_chart.dump_csv(path)
        with open(path, encoding='utf-8') as fp:
            lines = fp.read().splitlines()
    assert lines[0] == 'curve_id,t,x,y,s'
    assert len(lines) > straight_chart.n_curves


def test_build_chart_needs_curves():
    """At least two curves make a chart."""
    with pytest.raises(ValueError):
        build_chart(constant_field(), n_curves=1)
