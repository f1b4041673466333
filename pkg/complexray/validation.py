"""
Validation suite
================

``complexray validate`` runs every check below and writes
``validation.json``. Each entry records the measured value and the
threshold it was held to:

.. code-block:: json

    {"name": "classical_reduction", "passed": true,
     "value": 0.0071, "threshold": 0.02, "details": {...}}

A failed check ends the run with exit code 3.

=====================  ==================================================
check                  invariant
=====================  ==================================================
classical_reduction    constant field: inversion matches Ram-Lak FBP
root_field             mu = 1 + 0.3 z^2: lambda_i = +-i sqrt(0.3) z
jensen_agreement       Jensen verdicts match argument-principle counts
hilbert_filter         H of cut-off 1/(1+s^2) in closed form, H H = -I
transport_identity     X_theta D_theta f = f, 2 D_theta f -> I_theta f
plemelj_jump           Green's solution boundary values
refinement             mu = 1 + 0.3 z^2 reconstruction converges
stability_scaling      truncation distances scale with eps
determinism            written files do not depend on the thread count
=====================  ==================================================
"""

import os
import hashlib
import logging
import tempfile
from collections import OrderedDict

import numpy as np

from .approx import GeometricFieldSpec, stability_report
from .complexify import audit_sample, find_lambda_i
from .errors import NumericalFailure
from .field import PolyField, constant_field, membership_check, quadratic_field
from .flow import build_chart
from .oracle import classical_fbp, plemelj_check, truncated_cauchy_hilbert
from .reconstruct import ScalarGrid, reconstruct_end_to_end, relative_l2
from .transforms import Phantom, beam_transform, default_phantom, hilbert_s, ray_transform
from .utils import disc_samples, parallel_map, stage, write_json


logger = logging.getLogger("complexray")

VALIDATION_NAME = 'validation.json'
CAUCHY_EDGE = 40.0
TRANSPORT_RADIUS = 0.7


def result(name, value, threshold, passed, **details):
    """One entry of the validation report."""
    status = "OK" if passed else "ERROR!"
    logger.info("%s - %s: %.3e (threshold %.3e)", status, name, value, threshold)
    return {
        'name': name,
        'passed': bool(passed),
        'value': float(value),
        'threshold': float(threshold),
        'details': details,
    }


def files_digest(paths):
    """SHA1 over the bytes of the files, in order."""
    digest = hashlib.sha1()
    for path in paths:
        with open(path, 'rb') as fp:
            digest.update(fp.read())
    return digest.hexdigest()


def check_classical_reduction(config):
    """Constant field: agreement with classical filtered backprojection and with the phantom."""
    phantom = default_phantom()
    artifacts = {}
    estimate, error = reconstruct_end_to_end(phantom, constant_field(), config, artifacts=artifacts)
    classical = classical_fbp(artifacts['sinogram'], ScalarGrid(config.n, config.mask))
    difference = relative_l2(estimate, classical)
    return [
        result('classical_reduction', difference, 2e-2, difference <= 2e-2),
        result('classical_phantom_error', error['relative_l2'], 2e-2, error['relative_l2'] <= 2e-2,
               sup_error=error['sup_error'], imaginary_residual=error['imaginary_residual']),
    ]


def check_root_field(config):
    """Interior roots of mu = 1 + 0.3 z^2 are +-i sqrt(0.3) z."""
    field = quadratic_field(0.3)
    samples = disc_samples(100, seed=config.seed, radius=config.mask)
    worst = 0.0
    for z in samples:
        lam = find_lambda_i(field, z)
        expected = 1j * np.sqrt(0.3) * z
        worst = max(worst, min(abs(lam - expected), abs(lam + expected)))
    origin = find_lambda_i(field, 0j)
    return [
        result('root_field', worst, 1e-9, worst <= 1e-9),
        result('root_field_origin', abs(origin), 0.0, origin == 0),
    ]


def random_admissible_fields(count, seed=0, degree=4, terms=3):
    """Random admissible polynomial fields of total degree at most ``degree``."""
    rng = np.random.default_rng(seed)
    keys = [(p, q) for p in range(degree + 1) for q in range(degree + 1 - p) if p + q > 0]
    probes = disc_samples(64, seed=seed, radius=0.95)
    fields = []
    while len(fields) < count:
        chosen = rng.choice(len(keys), size=rng.integers(1, terms + 1), replace=False)
        values = rng.normal(size=len(chosen)) + 1j * rng.normal(size=len(chosen))
        values *= rng.uniform(0.1, 0.8) / np.sum(np.abs(values))
        coeffs = {(0, 0): 1.0}
        coeffs.update({keys[index]: value for index, value in zip(chosen, values)})
        field = PolyField(coeffs, name=f'random-{len(fields)}')
        if membership_check(field, probes).admissible:
            fields.append(field)
    return fields


def check_jensen_agreement(config, fields=500, samples=20):
    """Jensen margins and argument-principle root counts give the same verdicts."""
    compared = disagreements = 0
    for index, field in enumerate(random_admissible_fields(fields, seed=config.seed)):
        for z in disc_samples(samples, seed=config.seed + index + 1, radius=config.mask):
            record = audit_sample(field, z, config.quad_n)
            for condition in ('cond1', 'cond2'):
                agree = record[condition].get('agree')
                if agree is None:
                    continue
                compared += 1
                if not agree:
                    disagreements += 1
                    logger.error("ERROR! %s disagrees with root count for %r at z=%s", condition, field, z)
    return [result('jensen_agreement', disagreements, 0, disagreements == 0 and compared > 0,
                   compared=compared)]


def check_hilbert_filter(config):
    """Closed-form Hilbert pair and the H H = -I identity.

    The Cauchy profile is cut off at |s| = 40, so it is compared with the
    transform of the truncated profile.
    """
    del config
    s = np.linspace(-CAUCHY_EDGE, CAUCHY_EDGE, 2 ** 13 + 1)
    inner = np.abs(s) <= 10.0
    transformed = hilbert_s(1.0 / (1.0 + s ** 2), decay_tol=None)
    pair_error = float(np.max(np.abs(transformed[inner] - truncated_cauchy_hilbert(s[inner], CAUCHY_EDGE))))
    row = (1.0 - 2.0 * s ** 2) * np.exp(-s ** 2)
    twice = hilbert_s(hilbert_s(row), decay_tol=None)
    inverse_error = float(np.max(np.abs(twice + row)[inner]))
    return [
        result('hilbert_pair', pair_error, 1e-6, pair_error <= 1e-6),
        result('hilbert_inverse', inverse_error, 1e-5, inverse_error <= 1e-5),
    ]


def check_transport_identity(config, grid_size=16, directions=8, h=1.0 / 256):
    """Central differences of the beam transform along the rotated field give f back.

    The transport defect is a sup over every masked point of a
    ``grid_size`` grid on |z| <= 0.7, each point taking one of
    ``directions`` equispaced angles in turn. Derivatives use the
    fourth-order central stencil.
    """
    field = quadratic_field(0.3)
    chart = build_chart(field, config.n_curves, config.labeling, config.threads)
    phantom = default_phantom()
    points = ScalarGrid(grid_size, TRANSPORT_RADIUS).points

    def defect(index):
        z = complex(points[index])
        theta = 2.0 * np.pi * (index % directions) / directions
        velocity = np.exp(1j * theta) * complex(field.evaluate(z * np.exp(-1j * theta)))
        near, far = (
            [beam_transform(phantom, field, chart, z + sign * step * velocity, theta) for sign in (1, -1)]
            for step in (h, 2.0 * h)
        )
        derivative = (8.0 * (near[0] - near[1]) - (far[0] - far[1])) / (12.0 * h)
        return abs(derivative - float(phantom.evaluate(z)))

    transport = max(parallel_map(defect, range(len(points)), config.threads))
    angles = np.pi / 2.0 * np.arange(4)
    labels = np.linspace(chart.s_range[0], chart.s_range[1], 7)[1:-1]
    sino = ray_transform(phantom, field, chart, 4, len(labels), s_grid=labels)
    downstream = 0.0
    for column, label in enumerate(labels):
        curve = chart.curve(float(label))
        for row, theta in enumerate(angles):
            z = np.exp(1j * theta) * complex(curve.position(curve.t[-1] - 1e-6))
            limit = 2.0 * beam_transform(phantom, field, chart, z, theta)
            downstream = max(downstream, abs(limit - sino.values[row, column]))
    return [
        result('transport_identity', transport, 5e-3, transport <= 5e-3, points=len(points)),
        result('downstream_limit', downstream, 1e-6, downstream <= 1e-6),
    ]


def check_plemelj_jump(config):
    """Boundary values of the Green's solution approach the Plemelj combination."""
    phantom = default_phantom()
    z_samples = [0.1 + 0.05j, -0.2 + 0.3j, 0.35 - 0.25j]
    report = plemelj_check(phantom, 0.3, z_samples, threads=config.threads)
    deviation = report['max_deviation']['0.999']
    return [result('plemelj_jump', deviation, 5e-2, deviation <= 5e-2 and report['trend_ok'],
                   trend_ok=report['trend_ok'], deviations=report['max_deviation'])]


def check_refinement(config):
    """Nontrivial field: error below 5e-2 and decreasing when the resolution doubles."""
    phantom = Phantom(default_phantom().bumps, support_radius=0.8, name='three-bumps-0.8')
    field = quadratic_field(0.3)
    _, coarse = reconstruct_end_to_end(phantom, field, config)
    fine_config = config.replace(n=2 * config.n, n_theta=2 * config.n_theta, n_s=2 * config.n_s - 1)
    _, fine = reconstruct_end_to_end(phantom, field, fine_config)
    return [
        result('refinement_error', coarse['relative_l2'], 5e-2, coarse['relative_l2'] <= 5e-2,
               certification=coarse['certification']),
        result('refinement_decrease', fine['relative_l2'], coarse['relative_l2'],
               fine['relative_l2'] < coarse['relative_l2']),
    ]


def check_stability_scaling(config):
    """Sinogram distances of truncated geometric fields scale at least linearly in eps."""
    report = stability_report(GeometricFieldSpec(0.3), default_phantom(), config.eps, config.q, config)
    slope = report['slope'] if report['slope'] is not None else 0.0
    return [
        result('stability_slope', slope, 0.8, slope >= 0.8, constant=report['constant']),
        result('stability_monotone', float(report['distances_monotone'] and report['recon_gap_monotone']), 1.0,
               report['distances_monotone'] and report['recon_gap_monotone']),
    ]


def check_determinism(config, thread_counts=(1, 4, 8)):
    """Byte-identical sinogram and reconstruction files for every thread count."""
    digests = {}
    with tempfile.TemporaryDirectory() as tmp_dir:
        for threads in thread_counts:
            artifacts = {}
            estimate, _ = reconstruct_end_to_end(default_phantom(), quadratic_field(0.3),
                                                 config.replace(threads=threads), artifacts=artifacts)
            prefix = os.path.join(tmp_dir, f"threads-{threads}")
            paths = artifacts['sinogram'].save(prefix + '-sinogram.csv') + estimate.save(prefix + '-reconstruction')
            digests[threads] = files_digest(paths)
    distinct = len(set(digests.values()))
    return [result('determinism', distinct - 1, 0, distinct == 1, digests=digests)]


CHECKS = OrderedDict([
    ('classical_reduction', check_classical_reduction),
    ('root_field', check_root_field),
    ('jensen_agreement', check_jensen_agreement),
    ('hilbert_filter', check_hilbert_filter),
    ('transport_identity', check_transport_identity),
    ('plemelj_jump', check_plemelj_jump),
    ('refinement', check_refinement),
    ('stability_scaling', check_stability_scaling),
    ('determinism', check_determinism),
])


def run_suite(config, names=None, timings=None):
    """Run selected checks (all by default) and return the report."""
    names = list(names or CHECKS)
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise ValueError(f"Unknown checks: {', '.join(unknown)}")
    entries = []
    for name in names:
        try:
            with stage(name, timings):
                entries.extend(CHECKS[name](config))
        except NumericalFailure as exc:
            logger.error("ERROR! %s raised %s", name, exc)
            entries.append({
                'name': name,
                'passed': False,
                'value': None,
                'threshold': None,
                'details': {'error': f"{type(exc).__name__}: {exc}"},
            })
    passed = all(entry['passed'] for entry in entries)
    logger.info("Validation %s: %d of %d checks passed.", "passed" if passed else "failed",
                sum(entry['passed'] for entry in entries), len(entries))
    return {'passed': passed, 'checks': entries, 'settings': config.to_json()}


def write_report(report, path):
    """Write validation.json."""
    write_json(path, report)
    return path
