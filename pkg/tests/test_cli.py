"""End to end tests for the command line interface."""

import os

try:
    from unittest import mock
except ImportError:
    import mock
from click.testing import CliRunner

import pytest

from complexray.cli import cli, run_command
from complexray.errors import Trapped
from complexray.field import PolyField, quadratic_field
from complexray.manifest import MANIFEST_NAME
from complexray.options import CONFIG, OPTIONS
from complexray.utils import read_json
from complexray.validation import CHECKS, result
from .utils import temp_dir, write_field


COARSE = ['--ntheta', '32', '--ns', '65', '--n-curves', '32', '--n', '16', '--samples', '8']


@pytest.fixture
def workspace():
    """Temporary directory with a quadratic field and a wide phantom."""
    with temp_dir() as tmp_dir:
        write_field(tmp_dir, quadratic_field(0.3), 'quadratic.json')
        written = invoke(
            'phantom', '--bump', '0.2,0.1,1.0,0.3', '--bump', '-0.25,-0.2,0.6,0.35',
            "--out", tmp_dir,
        )
        assert written.exit_code == 0, written.output
        yield tmp_dir


def invoke(*args):
    """Run the CLI from a clean option state and return the click result."""
    OPTIONS.clear()
    CONFIG.clear()
    return CliRunner().invoke(cli, list(args))


def test_phantom_command(workspace):
    """Bumps given on the command line end up in phantom.json."""
    document = read_json(os.path.join(workspace, 'phantom.json'))
    assert len(document['bumps']) == 2
    assert document['bumps'][0] == {'x': 0.2, 'y': 0.1, 'amplitude': 1.0, 'width': 0.3}
    manifest = read_json(os.path.join(workspace, MANIFEST_NAME))
    assert manifest['command'] == 'phantom'
    assert list(manifest['outputs']) == ['phantom.json']


def test_bad_bump_is_usage_error():
    """Malformed bump exits with code 1."""
    with temp_dir() as tmp_dir:
        assert invoke('phantom', '--bump', '0.2,0.1', '--out', tmp_dir).exit_code == 1


def test_forward_then_invert(workspace):
    """Sinogram written by forward inverts back to the phantom."""
    field = os.path.join(workspace, 'quadratic.json')
    phantom = os.path.join(workspace, 'phantom.json')
    out = os.path.join(workspace, 'forward')
    forward = invoke('forward', '--field', field, '--phantom', phantom, '--out', out, *COARSE)
    assert forward.exit_code == 0, forward.output
    sidecar = read_json(os.path.join(out, 'sinogram.json'))
    assert sidecar['n_theta'] == 32 and sidecar['n_s'] == 65 and sidecar['n_curves'] == 32
    recon = os.path.join(workspace, 'invert')
    inverted = invoke('invert', '--sinogram', os.path.join(out, 'sinogram.csv'), '--field', field,
                      '--phantom', phantom, '--out', recon, *COARSE)
    assert inverted.exit_code == 0, inverted.output
    for name in ('reconstruction.csv', 'reconstruction.json', 'reconstruction.pgm',
                 'lambda_map.csv', 'error_report.json', MANIFEST_NAME):
        assert os.path.exists(os.path.join(recon, name)), name
    report = read_json(os.path.join(recon, 'error_report.json'))
    assert report['relative_l2'] < 0.5
    assert 'timings' not in report
    assert 'backproject' in read_json(os.path.join(recon, MANIFEST_NAME))['timings']


def test_invert_refuses_foreign_sinogram(workspace):
    """A sinogram computed for another field exits with code 1."""
    phantom = os.path.join(workspace, 'phantom.json')
    out = os.path.join(workspace, 'forward')
    assert invoke('forward', '--phantom', phantom, '--out', out, *COARSE).exit_code == 0
    refused = invoke('invert', '--sinogram', os.path.join(out, 'sinogram.csv'),
                     '--field', os.path.join(workspace, 'quadratic.json'), '--out', out, *COARSE)
    assert refused.exit_code == 1
    assert not os.path.exists(os.path.join(out, 'reconstruction.csv'))


def test_invert_from_phantom(workspace):
    """Without --sinogram the phantom is forward-projected first."""
    out = os.path.join(workspace, 'direct')
    inverted = invoke('invert', '--phantom', os.path.join(workspace, 'phantom.json'), '--out', out, *COARSE)
    assert inverted.exit_code == 0, inverted.output
    report = read_json(os.path.join(out, 'error_report.json'))
    assert report['certification'] == 'certified'
    assert os.path.exists(os.path.join(out, 'sinogram.csv'))


def test_outputs_do_not_depend_on_threads(workspace):
    """Byte-identical sinograms for one and four threads."""
    phantom = os.path.join(workspace, 'phantom.json')
    contents = []
    for threads in ('1', '4'):
        out = os.path.join(workspace, f'threads-{threads}')
        assert invoke('forward', '--phantom', phantom, '--out', out, '--threads', threads, *COARSE).exit_code == 0
        with open(os.path.join(out, 'sinogram.csv'), 'rb') as fp:
            contents.append(fp.read())
    assert contents[0] == contents[1]


def test_hness_reports_failures_without_error(workspace):
    """1 + 2 z^2 fails the coefficient order condition; the audit still succeeds."""
    field = write_field(workspace, PolyField({(0, 0): 1.0, (2, 0): 2.0}, check_disc=False), 'steep.json')
    audit = invoke('hness', '--field', field, '--samples', '32', '--out', workspace)
    assert audit.exit_code == 0, audit.output
    document = read_json(os.path.join(workspace, 'hness.json'))
    assert document['hness']['verdict'] == 'fail'
    assert any(sample['cond3']['verdict'] == 'fail' for sample in document['hness']['samples'])
    assert not document['membership']['passed']


def test_numerical_failure_exits_with_two(workspace):
    """Failures inside a stage map to exit code 2."""
    with mock.patch('complexray.cli.build_chart', side_effect=Trapped("curve did not leave the disc")):
        failed = invoke('forward', '--out', workspace, *COARSE)
    assert failed.exit_code == 2


def test_invalid_settings_exit_with_one(workspace):
    """Settings are validated before any work starts."""
    assert invoke('forward', '--ntheta', '100', '--out', workspace).exit_code == 1
    config = os.path.join(workspace, 'run.cfg')
    with open(config, 'wt', encoding='utf-8') as fp:
        fp.write("ns = 64\n")
    assert invoke('--config', config, 'forward', '--out', workspace).exit_code == 1
    assert invoke('forward', '--field', os.path.join(workspace, 'missing.json')).exit_code == 1


def test_validate_command(workspace):
    """Selected checks run and are reported."""
    checked = invoke('validate', '--check', 'root_field', '--check', 'hilbert_filter', '--out', workspace)
    assert checked.exit_code == 0, checked.output
    report = read_json(os.path.join(workspace, 'validation.json'))
    assert report['passed']
    assert [entry['name'] for entry in report['checks']] == [
        'root_field', 'root_field_origin', 'hilbert_pair', 'hilbert_inverse']


def test_failed_validation_exits_with_three(workspace):
    """Any failed check gives exit code 3."""
    def failing(config):
        return [result('always_fails', 1.0, 0.0, False)]

    with mock.patch.dict(CHECKS, {'root_field': failing}):
        assert invoke('validate', '--check', 'root_field', '--out', workspace).exit_code == 3
    assert not read_json(os.path.join(workspace, 'validation.json'))['passed']


def test_approx_command(workspace):
    """Stability report and its CSV; runtimes only in the manifest."""
    out = os.path.join(workspace, 'approx')
    ran = invoke('approx', '--eps', '0.1', '--eps', '0.05', '--out', out, *COARSE)
    assert ran.exit_code == 0, ran.output
    report = read_json(os.path.join(out, 'stability.json'))
    assert [entry['epsilon'] for entry in report['entries']] == [0.1, 0.05]
    assert all('runtime_s' not in entry for entry in report['entries'])
    assert report['c_hat']['verdict'] == 'pass'
    assert os.path.exists(os.path.join(out, 'stability.csv'))
    assert 'eps=0.1' in read_json(os.path.join(out, MANIFEST_NAME))['timings']


def test_run_command_exit_codes(workspace):
    """Console entry point returns the exit code instead of raising."""
    for argv, code in [
        (['validate', '--check', 'root_field', '--out', workspace], 0),
        (['forward', '--ns', '64', '--out', workspace], 1),
        (['no-such-command'], 1),
    ]:
        OPTIONS.clear()
        assert run_command(argv) == code
