"""
Characteristic curves and the (t, s) chart
==========================================

Integral curves of ``dz/dt = mu(z)`` are traced with an adaptive
Runge-Kutta 4(5) scheme until they leave the unit disc. Curves launched
from the inflow boundary (where the field points into the disc) carry a
transverse label ``s`` that stays constant along each curve, and the time
``t`` elapsed since entry.

Two labelings are available:

``height``
    ``s = Im(conj(u0) z_foot)`` where ``z_foot`` is the inflow foot-point
    and ``u0 = mu(0) / |mu(0)|``. For a constant field this is the signed
    distance to the line through the origin, the classical Radon label.

``arclength``
    Arclength along the inflow boundary, centred on its midpoint.

Between cached curves ``s`` and ``t`` are interpolated linearly on the
triangulated curve mesh; queries outside the mesh are traced back to the
inflow boundary exactly.
"""

import csv
import logging

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import LinearNDInterpolator
from scipy.optimize import brentq

from .errors import MultiComponentInflow, NumericalFailure, OutOfChart, Trapped
from .utils import parallel_map


logger = logging.getLogger("complexray")

RTOL = 1e-9
ATOL = 1e-12
CIRCLE_NODES = 4096
LABELINGS = ('height', 'arclength')


def time_cap(field):
    """T_max = 50 disc diameters travelled at the slowest speed of the field."""
    smallest = field.metadata.get('min_abs_mu')
    if smallest is None:
        radii = np.linspace(0.0, 1.0, 33)
        angles = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        smallest = float(np.min(np.abs(field.evaluate(radii[:, None] * np.exp(1j * angles)))))
    return 50.0 * 2.0 / smallest


class Curve:
    """Samples of one characteristic curve, increasing in t."""

    def __init__(self, t, z, dense, direction, t_exit, label=None):
        self.t = t
        self.z = z
        self.dense = dense
        self.direction = direction
        self.t_exit = t_exit
        self.label = label
        self.exited = True

    def __repr__(self):
        return f"<Curve s={self.label} t=[{self.t[0]:.4g}, {self.t[-1]:.4g}] samples={len(self.t)}>"

    @property
    def start(self):
        """First point in t order."""
        return complex(self.z[0])

    @property
    def end(self):
        """Last point in t order."""
        return complex(self.z[-1])

    @property
    def duration(self):
        """Time spent inside the disc."""
        return float(self.t[-1] - self.t[0])

    def position(self, t):
        """Dense-output position at times t."""
        values = self.dense(np.asarray(t, dtype=float))
        return values[0] + 1j * values[1]

    def uniform(self, count):
        """Resample at ``count`` uniform times covering the curve."""
        times = np.linspace(self.t[0], self.t[-1], max(int(count), 2))
        return times, self.position(times)


def trace_curve(field, z0, direction=1, t_max=None, rtol=RTOL, atol=ATOL):
    """Integrate dz/dt = mu(z) from z0 forward (+1) or backward (-1) until |z| = 1."""
    if direction not in (1, -1):
        raise ValueError(f"direction must be +1 or -1, got {direction}")
    z0 = complex(z0)
    if abs(z0) > 1.0 + 1e-9:
        raise ValueError(f"Start point {z0} lies outside the disc")
    t_max = time_cap(field) if t_max is None else t_max

    def velocity(_, state):
        value = field.mu_scalar(complex(state[0], state[1]))
        return [value.real, value.imag]

    def boundary(_, state):
        return state[0] * state[0] + state[1] * state[1] - 1.0

    boundary.terminal = True
    boundary.direction = 1

    solution = solve_ivp(
        velocity, (0.0, direction * t_max), [z0.real, z0.imag],
        method='RK45', rtol=rtol, atol=atol, events=boundary, dense_output=True,
    )
    if solution.status == -1:
        raise Trapped(f"Integration from z0={z0} failed: {solution.message}")
    if solution.status == 0:
        raise Trapped(f"Curve from z0={z0} did not leave the disc within |t| <= {t_max:.4g}")
    times = solution.t
    points = solution.y[0] + 1j * solution.y[1]
    order = np.argsort(times)
    t_exit = float(solution.t_events[0][0])
    return Curve(times[order], points[order], solution.sol, direction, t_exit)


def radial_component(field, phi):
    """Re(e^{-i phi} mu(e^{i phi})), negative where the field points into the disc."""
    boundary = np.exp(1j * np.asarray(phi, dtype=float))
    return np.real(np.conj(boundary) * field.evaluate(boundary))


class InflowArc:
    """Arc of the unit circle between angles start < end where the field enters."""

    def __init__(self, start, end):
        self.start = float(start)
        self.end = float(end)

    def __repr__(self):
        return f"InflowArc({self.start:.6f}, {self.end:.6f})"

    @property
    def length(self):
        """Arclength."""
        return self.end - self.start

    def unwrap(self, phi):
        """Representative of phi (mod 2 pi) closest to the arc."""
        phi = float(phi)
        middle = 0.5 * (self.start + self.end)
        return phi + 2.0 * np.pi * np.round((middle - phi) / (2.0 * np.pi))

    def distance(self, phi):
        """Angular distance from phi to the arc, zero inside."""
        phi = self.unwrap(phi)
        return max(self.start - phi, phi - self.end, 0.0)


def inflow_arcs(field, nodes=CIRCLE_NODES):
    """Locate the inflow arcs on a circle grid and refine their ends."""
    step = 2.0 * np.pi / nodes
    phi = step * np.arange(nodes)
    inward = radial_component(field, phi) < 0.0
    if inward.all() or not inward.any():
        raise NumericalFailure("Field has no proper inflow boundary on the unit circle")
    first = int(np.argmin(inward))
    arcs = []
    index = 0
    while index < nodes:
        node = first + index
        if inward[node % nodes]:
            tail = index
            while tail + 1 < nodes and inward[(first + tail + 1) % nodes]:
                tail += 1
            start = _refine_crossing(field, step * (node - 1), step * node)
            end = _refine_crossing(field, step * (first + tail), step * (first + tail + 1))
            arcs.append(InflowArc(start, end))
            index = tail + 1
        else:
            index += 1
    base = arcs[0].start
    shift = 2.0 * np.pi * np.floor(base / (2.0 * np.pi))
    arcs = [InflowArc(arc.start - shift, arc.end - shift) for arc in arcs]
    logger.debug("Inflow arcs: %r", arcs)
    return arcs


def _refine_crossing(field, lower, upper):
    return brentq(lambda angle: float(radial_component(field, angle)), lower, upper, xtol=1e-14)


class LabelMap:
    """Monotone s-labels of inflow foot-points."""

    def __init__(self, field, arcs, labeling='height'):
        if labeling not in LABELINGS:
            raise ValueError(f"Unknown labeling {labeling!r}, expected one of {LABELINGS}")
        self.labeling = labeling
        self.arcs = arcs
        mu0 = complex(field.evaluate(0j))
        self.heading = mu0 / abs(mu0)
        total = sum(arc.length for arc in arcs)
        self.offsets = []
        running = -0.5 * total
        for arc in arcs:
            self.offsets.append(running)
            running += arc.length
        self.ranges = [self._arc_range(position) for position in range(len(arcs))]
        self._check_monotone()
        self._check_overlap()

    def _arc_label(self, position, phi):
        arc = self.arcs[position]
        if self.labeling == 'height':
            return float(np.imag(np.conj(self.heading) * np.exp(1j * phi)))
        return self.offsets[position] + (phi - arc.start)

    def _arc_range(self, position):
        arc = self.arcs[position]
        ends = (self._arc_label(position, arc.start), self._arc_label(position, arc.end))
        return min(ends), max(ends)

    def _check_monotone(self):
        for position, arc in enumerate(self.arcs):
            angles = np.linspace(arc.start, arc.end, 257)
            labels = np.array([self._arc_label(position, angle) for angle in angles])
            steps = np.diff(labels)
            if not (np.all(steps > 0) or np.all(steps < 0)):
                raise MultiComponentInflow(
                    f"{self.labeling} labels fold on inflow arc {arc!r}; try the arclength labeling"
                )

    def _check_overlap(self):
        ordered = sorted(self.ranges)
        for (_, upper), (lower, _) in zip(ordered, ordered[1:]):
            if lower < upper:
                raise MultiComponentInflow(
                    f"Label ranges of inflow arcs interleave: {ordered}"
                )

    @property
    def s_range(self):
        """Smallest and largest label."""
        return min(low for low, _ in self.ranges), max(high for _, high in self.ranges)

    def label_at_angle(self, phi):
        """Label of the inflow foot-point e^{i phi}, clamped to the nearest arc."""
        position = min(range(len(self.arcs)), key=lambda index: self.arcs[index].distance(phi))
        arc = self.arcs[position]
        angle = min(max(arc.unwrap(phi), arc.start), arc.end)
        return self._arc_label(position, angle)

    def angle_of_label(self, label):
        """Foot-point angle carrying the given label."""
        for position, (low, high) in enumerate(self.ranges):
            if low <= label <= high:
                arc = self.arcs[position]
                if self.labeling == 'arclength':
                    return arc.start + (label - self.offsets[position])
                return brentq(
                    lambda angle, index=position: self._arc_label(index, angle) - label,
                    arc.start, arc.end, xtol=1e-14,
                )
        raise OutOfChart(f"Label {label} lies outside the inflow label ranges {self.ranges}")


class Chart:
    """Flow coordinates (t, s) on the unit disc."""

    def __init__(self, field, labels, curves, t_max):
        self.field = field
        self.labels = labels
        self.t_max = t_max
        self.curves = {curve.label: curve for curve in curves}
        self.n_curves = len(curves)
        self.orientation = None
        self._interpolator = self._build_interpolator(curves)

    def __repr__(self):
        return (f"<Chart {self.field.name} labeling={self.labels.labeling} "
                f"curves={len(self.curves)} s_range={self.s_range}>")

    @property
    def labeling(self):
        """Labeling name."""
        return self.labels.labeling

    @property
    def s_range(self):
        """Range of s over the disc."""
        return self.labels.s_range

    def _build_interpolator(self, curves):
        spacing = 2.0 / max(len(curves), 1)
        points, values = [], []
        for curve in curves:
            length = float(np.sum(np.abs(np.diff(curve.z))))
            times, positions = curve.uniform(np.ceil(length / (0.5 * spacing)) + 1)
            points.append(np.column_stack([positions.real, positions.imag]))
            values.append(np.column_stack([np.full(times.shape, curve.label), times]))
        return LinearNDInterpolator(np.vstack(points), np.vstack(values))

    def curve(self, label):
        """Characteristic curve with the given label, traced on first use."""
        cached = self.curves.get(label)
        if cached is not None:
            return cached
        curve = launch_curve(self.field, self.labels, label, self.t_max)
        self.curves[label] = curve
        return curve

    def back_trace(self, z):
        """Exact (s, t) of z by tracing back to the inflow boundary."""
        try:
            curve = trace_curve(self.field, z, direction=-1, t_max=self.t_max)
        except (Trapped, ValueError) as exc:
            raise OutOfChart(f"Back-trace from z={complex(z)} failed: {exc}") from exc
        foot = curve.start
        return self.labels.label_at_angle(np.angle(foot)), -curve.t_exit

    def coordinates(self, z, strict=True):
        """Arrays (s, t) at points z, NaN where unresolved if not strict."""
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        values = self._interpolator(flat.real, flat.imag)
        s_values, t_values = values[:, 0].copy(), values[:, 1].copy()
        for index in np.flatnonzero(np.isnan(s_values)):
            point = complex(flat[index])
            if abs(point) > 1.0:
                if strict:
                    raise OutOfChart(f"z={point} lies outside the disc")
                continue
            try:
                s_values[index], t_values[index] = self.back_trace(point)
            except OutOfChart:
                if strict:
                    raise
        return s_values.reshape(z.shape), t_values.reshape(z.shape)

    def s_of_z(self, z, strict=True):
        """Transverse label s(z)."""
        return self.coordinates(z, strict)[0]

    def t_of_z(self, z, strict=True):
        """Time since entry t(z)."""
        return self.coordinates(z, strict)[1]

    def grad_s(self, z, h=1e-4):
        """(ds, dbar s) by central differences, one-sided where a stencil point is unresolved."""
        z = np.asarray(z, dtype=complex)
        center = self.s_of_z(z, strict=False)
        s_x = _difference(self.s_of_z(z + h, strict=False), center, self.s_of_z(z - h, strict=False), h)
        s_y = _difference(self.s_of_z(z + 1j * h, strict=False), center, self.s_of_z(z - 1j * h, strict=False), h)
        if np.any(np.isnan(s_x)) or np.any(np.isnan(s_y)):
            raise OutOfChart(f"Gradient of s is unresolved near {z.ravel()[np.isnan(s_x + s_y).ravel()][:3]}")
        ds = 0.5 * (s_x - 1j * s_y)
        if ds.ndim == 0:
            ds = complex(ds)
        return ds, np.conj(ds)

    def dump_csv(self, path):
        """Write cached curve samples as curve_id, t, x, y, s rows."""
        with open(path, 'wt', encoding="utf-8", newline='') as fp:
            writer = csv.writer(fp)
            writer.writerow(['curve_id', 't', 'x', 'y', 's'])
            for curve_id, label in enumerate(sorted(self.curves)):
                curve = self.curves[label]
                for time, point in zip(curve.t, curve.z):
                    writer.writerow([curve_id, f"{time:.17g}", f"{point.real:.17g}",
                                     f"{point.imag:.17g}", f"{label:.17g}"])


def _difference(forward, center, backward, h):
    central = (forward - backward) / (2.0 * h)
    one_sided_forward = (forward - center) / h
    one_sided_backward = (center - backward) / h
    return np.where(
        np.isnan(central),
        np.where(np.isnan(one_sided_forward), one_sided_backward, one_sided_forward),
        central,
    )


def launch_curve(field, labels, label, t_max=None):
    """Trace the curve entering at the foot-point with the given label."""
    phi = labels.angle_of_label(label)
    curve = trace_curve(field, np.exp(1j * phi), direction=1, t_max=t_max)
    curve.label = float(label)
    return curve


def build_chart(field, n_curves=128, labeling='height', threads=1):
    """Locate the inflow boundary, launch n_curves characteristics and build the chart."""
    if n_curves < 2:
        raise ValueError(f"n_curves must be at least 2, got {n_curves}")
    labels = LabelMap(field, inflow_arcs(field), labeling)
    low, high = labels.s_range
    spacing = (high - low) / n_curves
    launch = low + spacing * (np.arange(n_curves) + 0.5)
    t_max = time_cap(field)
    curves = parallel_map(lambda label: launch_curve(field, labels, label, t_max), launch, threads)
    logger.info("Chart for %s: %d curves, labeling %s, s in [%.6g, %.6g].",
                field.name, len(curves), labeling, low, high)
    return Chart(field, labels, curves, t_max)


def s_of_z(chart, z):
    """Transverse label s(z)."""
    return chart.s_of_z(z)


def t_of_z(chart, z):
    """Time since entry t(z)."""
    return chart.t_of_z(z)


def grad_s(chart, z, h=1e-4):
    """(ds, dbar s) at z."""
    return chart.grad_s(z, h)
