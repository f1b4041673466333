"""Command line interface.

.. code-block:: shell

    $ complexray phantom --bump 0.2,0.1,1.0,0.15 --out out
    $ complexray forward --field quadratic.json --phantom out/phantom.json --out out
    $ complexray hness --field quadratic.json
    $ complexray invert --sinogram out/sinogram.csv --field quadratic.json
    $ complexray approx --eps 0.1 --eps 0.05 --eps 0.01
    $ complexray validate

Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
3 failed validation.
"""

import os
import sys
import logging
from traceback import print_exception

import click

from .approx import GeometricFieldSpec, c_hat_test, load_analytic, stability_report, write_stability_csv
from .complexify import hness_check
from .config import RunConfig
from .errors import NumericalFailure, ValidationFailure
from .features import FEATURES
from .field import constant_field, load_field, membership_check
from .flow import build_chart
from .manifest import verify_field_digest, write_manifest
from .reconstruct import ScalarGrid, backproject, lambda_map, reconstruct_end_to_end, relative_l2, sup_error
from .transforms import Phantom, Sinogram, default_phantom, filter_sinogram, load_phantom, ray_transform
from .utils import disc_samples, stage, write_json
from .validation import CHECKS, VALIDATION_NAME, run_suite, write_report


THIS_FILE = os.path.abspath(__file__)

EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VALIDATION = 3

logger = logging.getLogger("complexray")


class PipelineGroup(click.Group):
    """Click group mapping pipeline failures to exit codes."""

    def make_context(self, info_name, args, parent=None, **extra):
        try:
            return super().make_context(info_name, args, parent=parent, **extra)
        except click.UsageError as exc:
            exc.exit_code = EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = EXIT_USAGE
            raise
        except NumericalFailure as exc:
            logger.critical("ERROR! Numerical failure %s", exc)
            ctx.exit(EXIT_NUMERICAL)
        except ValidationFailure as exc:
            logger.critical("ERROR! %s", exc)
            ctx.exit(EXIT_VALIDATION)
        return None


@click.group(cls=PipelineGroup)
@FEATURES.bind
def cli():
    """Explicit inversion of ray transforms over planar vector field curves."""
    logging.basicConfig(level=logging.DEBUG, format="%(message)s")
    sys.excepthook = exception_hook


def run_config():
    """Validated settings from flags, config file and defaults."""
    return RunConfig.from_features(FEATURES)


def _load(loader, path, what):
    try:
        return loader(path)
    except NumericalFailure:
        raise
    except (ValueError, KeyError, TypeError, OSError) as exc:
        raise click.UsageError(f"Can't read {what} from {path}: {exc}") from exc


def field_input(check_disc=True):
    """Field from --field, the constant field by default."""
    path = FEATURES.field.path
    if path is None:
        return constant_field()
    return _load(lambda name: load_field(name, check_disc), path, "field")


def phantom_input():
    """Phantom from --phantom, the three-bump phantom by default."""
    path = FEATURES.phantom.path
    if path is None:
        return default_phantom()
    return _load(load_phantom, path, "phantom")


def finish(command, inputs, outputs, timings):
    """Write manifest.json for the outputs of a command."""
    return write_manifest(FEATURES.output_dir.value or 'out', command, inputs, outputs, timings)


def parse_bump(text):
    """Parse ``x,y,amplitude,width``.

    >>> parse_bump('0.2, -0.1, 1.0, 0.15')
    ((0.2-0.1j), 1.0, 0.15)
    """
    try:
        x, y, amplitude, width = (float(item) for item in text.split(','))
    except ValueError as exc:
        raise click.BadParameter(f"expected X,Y,AMPLITUDE,WIDTH, got {text!r}") from exc
    return complex(x, y), amplitude, width


@cli.command('phantom')
@click.option('--bump', 'bumps', multiple=True, metavar='X,Y,AMPLITUDE,WIDTH',
              help='Gaussian bump. Can be supplied multiple times (default: three bumps).')
@click.option('--support-radius', type=float, default=0.9, show_default=True,
              help='Radius of the smooth cutoff.')
@click.option('--name', default='phantom', show_default=True, help='Phantom name.')
@FEATURES.bind
def phantom_command(bumps, support_radius, name):
    """Write a phantom JSON from bump parameters."""
    run_config()
    if bumps:
        try:
            phantom = Phantom([parse_bump(text) for text in bumps], support_radius, name)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
    else:
        phantom = default_phantom()
    path = FEATURES.output_path('phantom.json')
    write_json(path, phantom.to_json())
    logger.info("Phantom %s with %d bumps written to %s.", phantom.name, len(phantom.bumps), path)
    finish('phantom', [], [path], {})


@cli.command('forward')
@FEATURES.bind
def forward_command():
    """Compute the sinogram of a phantom over the field's curves."""
    config = run_config()
    field, phantom = field_input(), phantom_input()
    timings = {}
    with stage('chart', timings):
        chart = build_chart(field, config.n_curves, config.labeling, config.threads)
    with stage('ray_transform', timings):
        sino = ray_transform(phantom, field, chart, config.n_theta, config.n_s, config.threads)
    outputs = sino.save(FEATURES.output_path('sinogram.csv'))
    finish('forward', [FEATURES.field.path, FEATURES.phantom.path], outputs, timings)


@cli.command('hness')
@FEATURES.bind
def hness_command():
    """Audit the H-ness conditions of a field on random disc samples.

    Failed conditions are reported, not treated as errors.
    """
    config = run_config()
    field = field_input(check_disc=False)
    samples = disc_samples(config.hness_samples, seed=config.seed, radius=config.mask)
    timings = {}
    with stage('membership', timings):
        membership = membership_check(field, samples)
    with stage('hness', timings):
        report = hness_check(field, samples, config.quad_n, config.threads)
    for condition in ('cond1', 'cond2', 'cond3'):
        failures = report.failures(condition)
        if failures:
            logger.warning("%s fails at %d of %d samples.", condition, len(failures), len(samples))
    path = FEATURES.output_path('hness.json')
    write_json(path, {'hness': report.to_json(), 'membership': membership.to_json()})
    finish('hness', [FEATURES.field.path], [path], timings)


def _invert_sinogram(config, field, timings):
    sinogram_path = FEATURES.sinogram.path
    sino = _load(Sinogram.load, sinogram_path, "sinogram")
    verify_field_digest(sino.metadata.get('field_hash'), field, FEATURES.field.path or "the constant field")
    labeling = sino.metadata.get('labeling', config.labeling)
    n_curves = sino.metadata.get('n_curves', config.n_curves)
    with stage('chart', timings):
        chart = build_chart(field, n_curves, labeling, config.threads)
    with stage('filter', timings):
        filtered = filter_sinogram(sino)
    grid = ScalarGrid(config.n, config.mask)
    with stage('lambda_map', timings):
        lambdas = lambda_map(field, grid)
    with stage('backproject', timings):
        estimate = backproject(filtered, chart, field, grid, config.threads, lambdas)
    error = {
        'field': field.name,
        'imaginary_residual': estimate.metadata['imaginary_residual'],
        'sinogram': sino.metadata.get('phantom'),
    }
    if FEATURES.phantom.path is not None:
        truth = grid.sample(phantom_input().evaluate)
        error.update(relative_l2=relative_l2(estimate, truth), sup_error=sup_error(estimate, truth))
    return estimate, lambdas, error, [sinogram_path], []


def _invert_phantom(config, field, timings):
    artifacts = {}
    estimate, error = reconstruct_end_to_end(phantom_input(), field, config, timings, artifacts)
    outputs = artifacts['sinogram'].save(FEATURES.output_path('sinogram.csv'))
    return estimate, artifacts['lambda_map'], error, [FEATURES.phantom.path], outputs


@cli.command('invert')
@FEATURES.bind
def invert_command():
    """Reconstruct a phantom from a sinogram, or from a phantom via forward projection."""
    config = run_config()
    field = field_input()
    timings = {}
    if FEATURES.sinogram.path is not None:
        estimate, lambdas, error, inputs, outputs = _invert_sinogram(config, field, timings)
    else:
        estimate, lambdas, error, inputs, outputs = _invert_phantom(config, field, timings)
    error.pop('timings', None)
    outputs.extend(estimate.save(FEATURES.output_path('reconstruction')))
    outputs.append(lambdas.save_csv(FEATURES.output_path('lambda_map.csv')))
    report_path = FEATURES.output_path('error_report.json')
    write_json(report_path, error)
    outputs.append(report_path)
    finish('invert', [FEATURES.field.path] + inputs, outputs, timings)


@cli.command('approx')
@FEATURES.bind
def approx_command():
    """Truncate an analytic field at every --eps and report stability."""
    config = run_config()
    path = FEATURES.analytic.path
    spec = GeometricFieldSpec(0.3) if path is None else _load(load_analytic, path, "analytic field")
    phantom = phantom_input()
    timings = {}
    samples = disc_samples(config.hness_samples, seed=config.seed, radius=config.mask)
    with stage('c_hat', timings):
        membership = c_hat_test(spec, samples)
    with stage('stability', timings):
        report = stability_report(spec, phantom, config.eps, config.q, config)
    for entry in report['entries']:
        timings[f"eps={entry['epsilon']:g}"] = entry.pop('runtime_s')
    report['c_hat'] = membership
    json_path = FEATURES.output_path('stability.json')
    write_json(json_path, report)
    csv_path = write_stability_csv(report, FEATURES.output_path('stability.csv'))
    finish('approx', [path, FEATURES.phantom.path], [json_path, csv_path], timings)


@cli.command('validate')
@click.option('--check', 'checks', multiple=True, type=click.Choice(list(CHECKS)),
              help='Run only this check. Can be supplied multiple times (default: all).')
@FEATURES.bind
def validate_command(checks):
    """Run the oracle suite; exit with code 3 if any check fails."""
    config = run_config()
    timings = {}
    report = run_suite(config, checks or None, timings)
    path = write_report(report, FEATURES.output_path(VALIDATION_NAME))
    finish('validate', [], [path], timings)
    if not report['passed']:
        failed = [entry['name'] for entry in report['checks'] if not entry['passed']]
        raise ValidationFailure(f"Failed checks: {', '.join(failed)}")


def run_command(argv):
    """Run the CLI on argv and return the exit code."""
    try:
        code = cli.main(args=list(argv), prog_name='complexray', standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return EXIT_USAGE
    return code if isinstance(code, int) else 0


def main():
    """Console script entry point."""
    sys.exit(run_command(sys.argv[1:]))


def exception_hook(exctype, value, traceback):
    """Strip exception printout above this module."""
    print_exception(exctype, value, trim_traceback(traceback))


def trim_traceback(traceback):
    """Trim traceback top so it starts with this module.

    Return original traceback if this module is not found.
    """
    new_traceback = traceback
    while new_traceback is not None:
        file_path = new_traceback.tb_frame.f_code.co_filename
        if THIS_FILE.startswith(file_path):
            return new_traceback
        new_traceback = new_traceback.tb_next
    return traceback


if __name__ == '__main__':
    main()
