"""Oracle suite tests."""

import os

try:
    from unittest import mock
except ImportError:
    import mock
import pytest

from complexray.config import RunConfig
from complexray.errors import QuadratureSingular
from complexray.field import membership_check
from complexray.utils import disc_samples, read_json
from complexray.validation import (
    CHECKS, check_determinism, check_hilbert_filter, check_jensen_agreement, check_root_field,
    check_stability_scaling, check_transport_identity, random_admissible_fields, run_suite, write_report,
)
from .utils import temp_dir


def test_root_field_check():
    """Closed-form roots of the quadratic field."""
    entries = check_root_field(RunConfig())
    assert [entry['name'] for entry in entries] == ['root_field', 'root_field_origin']
    assert all(entry['passed'] for entry in entries)


def test_hilbert_filter_check():
    """Closed-form pair and H H = -I."""
    entries = check_hilbert_filter(RunConfig())
    assert all(entry['passed'] for entry in entries), entries
    assert entries[0]['threshold'] == 1e-6


def test_stability_check_runs_at_default_tolerances():
    """Default eps list yields a positive slope against the certified reference."""
    config = RunConfig(n=16, n_theta=32, n_s=65, n_curves=32, hness_samples=8)
    slope, monotone = check_stability_scaling(config)
    assert slope['name'] == 'stability_slope'
    assert slope['value'] > 0
    assert monotone['name'] == 'stability_monotone'


def test_determinism_check_hashes_written_files():
    """Sinogram and reconstruction files agree byte for byte across thread counts."""
    config = RunConfig(n=16, n_theta=32, n_s=65, n_curves=32, hness_samples=8)
    entry, = check_determinism(config, thread_counts=(1, 3))
    assert entry['passed'], entry
    digests = entry['details']['digests']
    assert set(digests) == {1, 3}
    assert len(digests[1]) == 40


def test_transport_identity_covers_masked_grid():
    """Transport defect is a sup over every masked grid point."""
    transport, downstream = check_transport_identity(RunConfig(n_curves=32), grid_size=8)
    assert transport['passed'], transport
    assert transport['details']['points'] == 16
    assert downstream['name'] == 'downstream_limit'


def test_random_fields_are_admissible():
    """Generated fields are reproducible and admissible."""
    fields = random_admissible_fields(6, seed=3)
    assert len(fields) == 6
    assert fields == random_admissible_fields(6, seed=3)
    probes = disc_samples(64, seed=3, radius=0.95)
    assert all(membership_check(field, probes).admissible for field in fields)


def test_jensen_agreement_check():
    """Jensen margins agree with root counts on a handful of fields."""
    entries = check_jensen_agreement(RunConfig(), fields=5, samples=4)
    assert entries[0]['passed'], entries
    assert entries[0]['details']['compared'] > 0


def test_suite_records_numerical_failures():
    """A check raising a numerical failure fails the report instead of aborting it."""
    def broken(config):
        raise QuadratureSingular("kernel blew up")

    with mock.patch.dict(CHECKS, {'broken': broken}):
        report = run_suite(RunConfig(), ['root_field', 'broken'])
    assert not report['passed']
    failed = [entry for entry in report['checks'] if not entry['passed']]
    assert failed[0]['name'] == 'broken'
    assert 'QuadratureSingular' in failed[0]['details']['error']
    assert report['settings']['n'] == 128


def test_suite_rejects_unknown_checks():
    """Names must come from CHECKS."""
    with pytest.raises(ValueError):
        run_suite(RunConfig(), ['everything'])


def test_report_file():
    """Suite report is written as JSON."""
    timings = {}
    report = run_suite(RunConfig(), ['hilbert_filter'], timings)
    assert report['passed']
    assert set(timings) == {'hilbert_filter'}
    with temp_dir() as tmp_dir:
        path = write_report(report, os.path.join(tmp_dir, 'validation.json'))
        assert read_json(path)['checks'][0]['name'] == 'hilbert_pair'
