"""
Frequency truncation of analytic fields
=======================================

An analytic field coefficient enters the pipeline through a polynomial
truncation that keeps the Laurent frequencies ``k <= q - p <= l`` and the
total degree ``p + q <= N``. Windows are searched along the nested
sequence ``[0, 0], [-1, 0], [-1, 1], [-2, 1], [-2, 2], ...`` and the first
admissible window whose certified sup-norm tail is below ``eps`` wins.

Analytic field file:

.. code-block:: json

    {"family": "geometric", "beta": 0.5, "support": "full", "base": 1.0}

``full`` uses ``a_pq = base * beta^(p+q)`` for every ``(p, q)``,
``holomorphic`` keeps only ``q = 0``.
"""

import csv
import time
import logging

import numpy as np

from .errors import EmptyWindow, InsufficientNonzeroPairs, NoAdmissibleWindow, VanishingField
from .field import PolyField, membership_check
from .flow import build_chart
from .reconstruct import ScalarGrid, backproject
from .transforms import filter_sinogram, hilbert_s, make_s_grid, ray_transform, s_derivative
from .utils import disc_samples, parallel_map, read_json


logger = logging.getLogger("complexray")

SUPPORTS = ('full', 'holomorphic')
MAX_REFERENCE_DEGREE = 400
MIN_RATIO_PAIRS = 5
REFERENCE_FIDELITY = 1e-3


class AnalyticFieldSpec:
    """Coefficient generator with a certified tail bound.

    ``coefficient(p, q)`` returns a_pq and ``tail(N)`` bounds the sum of
    |a_pq| over p + q > N.
    """

    def __init__(self, coefficient, tail, name='analytic'):
        self._coefficient = coefficient
        self._tail = tail
        self.name = name

    def __repr__(self):
        return f"<AnalyticFieldSpec {self.name}>"

    def coefficient(self, p, q):
        """a_pq"""
        return complex(self._coefficient(p, q))

    def tail(self, degree):
        """Bound on sum of |a_pq| over p + q > degree."""
        return float(self._tail(degree))

    def reference_degree(self, tol=1e-16):
        """Smallest degree whose tail is negligible."""
        scale = max(abs(self.coefficient(0, 0)), 1.0)
        for degree in range(MAX_REFERENCE_DEGREE + 1):
            if self.tail(degree) <= tol * scale:
                return degree
        return MAX_REFERENCE_DEGREE

    def coefficients(self, degree):
        """All nonzero a_pq with p + q <= degree."""
        table = {}
        for total in range(degree + 1):
            for p in range(total + 1):
                value = self.coefficient(p, total - p)
                if value != 0:
                    table[(p, total - p)] = value
        return table

    def to_json(self):
        """Generic specs are not serializable."""
        raise NotImplementedError(f"{type(self).__name__} has no file representation")


class GeometricFieldSpec(AnalyticFieldSpec):
    """a_pq = base * beta^(p+q) on all (p, q) or on q = 0 only."""

    def __init__(self, beta, support='full', base=1.0, name=None):
        if not 0.0 < beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {beta}")
        if support not in SUPPORTS:
            raise ValueError(f"Unknown support {support!r}, expected one of {SUPPORTS}")
        self.beta = float(beta)
        self.support = support
        self.base = complex(base)
        super().__init__(self._geometric, self._geometric_tail,
                         name or f"geometric-{support}-{beta:g}")

    def _geometric(self, p, q):
        if self.support == 'holomorphic' and q:
            return 0.0
        return self.base * self.beta ** (p + q)

    def _geometric_tail(self, degree):
        beta, scale = self.beta, abs(self.base)
        if self.support == 'holomorphic':
            return scale * beta ** (degree + 1) / (1.0 - beta)
        return scale * beta ** (degree + 1) * ((degree + 1) * (1.0 - beta) + 1.0) / (1.0 - beta) ** 2

    def to_json(self):
        """Serializable representation."""
        return {
            'family': 'geometric',
            'beta': self.beta,
            'support': self.support,
            'base': [self.base.real, self.base.imag],
            'name': self.name,
        }


def load_analytic(path):
    """Read analytic field family file."""
    document = read_json(path)
    family = document.get('family')
    if family != 'geometric':
        raise ValueError(f"Unknown analytic family {family!r}")
    base = document.get('base', 1.0)
    if isinstance(base, list):
        base = complex(*base)
    return GeometricFieldSpec(document['beta'], document.get('support', 'full'), base, document.get('name'))


def _table(spec, degree):
    if isinstance(spec, PolyField):
        return {key: value for key, value in spec.coeffs.items() if sum(key) <= degree}
    return spec.coefficients(degree)


def _degree_limit(spec):
    if isinstance(spec, PolyField):
        return spec.degree_bound
    return spec.reference_degree()


def _residual_tail(spec, degree):
    if isinstance(spec, PolyField):
        return 0.0
    return spec.tail(degree)


def _in_window(key, k, l, degree):
    p, q = key
    return k <= q - p <= l and p + q <= degree


def project_Pkl(spec, k, l, N):
    """Keep exactly the a_pq with k <= q - p <= l and p + q <= N.

    >>> from .field import quadratic_field
    >>> project_Pkl(quadratic_field(0.3), 0, 0, 4).coeffs
    {(0, 0): (1+0j)}
    """
    if k > l:
        raise ValueError(f"Empty frequency range [{k}, {l}]")
    table = _table(spec, N)
    kept = {key: value for key, value in table.items() if _in_window(key, k, l, N)}
    if not kept:
        raise EmptyWindow(f"No coefficient of {spec.name} survives window [{k}, {l}] with N={N}")
    excluded = sum(abs(value) for key, value in _table(spec, _degree_limit(spec)).items()
                   if not _in_window(key, k, l, N))
    zero_tol = getattr(spec, 'zero_tol', None)
    return PolyField(kept, zero_tol=zero_tol,
                     tail_bound=excluded + _residual_tail(spec, _degree_limit(spec)),
                     name=f"{spec.name}[{k},{l}]N{N}")


def laurent_coefficients(spec, z, j_max):
    """Laurent coefficients c_j(z) of the analytic field for -j_max <= j <= j_max."""
    z = complex(z)
    coefficients = {}
    for (p, q), value in _table(spec, _degree_limit(spec)).items():
        frequency = q - p
        if abs(frequency) <= j_max:
            coefficients[frequency] = coefficients.get(frequency, 0j) + value * z ** p * np.conj(z) ** q
    return coefficients


def _ratio_pairs(coefficients, j_max, sign):
    ratios = []
    for n in range(j_max):
        current = coefficients.get(sign * n, 0j)
        following = coefficients.get(sign * (n + 1), 0j)
        if current != 0 and following != 0:
            ratios.append(abs(following / current))
    return ratios


def c_hat_test(spec, samples, j_max=40, margin=0.05):
    """Empirical limsup test of consecutive Laurent coefficient ratios."""
    if isinstance(spec, PolyField):
        return {'verdict': "not applicable (already polynomial)", 'samples': []}
    records = []
    for z in np.atleast_1d(np.asarray(samples, dtype=complex)):
        if z == 0:
            raise ValueError("Ratio test needs samples away from z = 0")
        coefficients = laurent_coefficients(spec, z, j_max)
        tails = []
        pairs = 0
        for sign in (1, -1):
            ratios = _ratio_pairs(coefficients, j_max, sign)
            pairs += len(ratios)
            if ratios:
                tails.append(max(ratios[len(ratios) // 2:]))
        if pairs < MIN_RATIO_PAIRS:
            raise InsufficientNonzeroPairs(
                f"Only {pairs} consecutive nonzero coefficient pairs at z={complex(z)} up to j_max={j_max}"
            )
        tail_sup = max(tails)
        records.append({
            'z': [z.real, z.imag],
            'pairs': pairs,
            'tail_sup': tail_sup,
            'verdict': "pass" if tail_sup < 1.0 - margin else "fail",
        })
    passed = all(record['verdict'] == "pass" for record in records)
    return {
        'verdict': "pass" if passed else "fail",
        'label': "empirical",
        'margin': margin,
        'samples': records,
    }


def nested_windows(j_max):
    """[0, 0], [-1, 0], [-1, 1], [-2, 1], ... up to |k|, l <= j_max.

    >>> list(nested_windows(2))
    [(0, 0), (-1, 0), (-1, 1), (-2, 1), (-2, 2)]
    """
    k, l = 0, 0
    yield k, l
    while True:
        if -k == l:
            k -= 1
        else:
            l += 1
        if max(-k, l) > j_max:
            return
        yield k, l


def _sup_tail(table, powers, residual, k, l, degree):
    keys = np.array(list(table), dtype=int).reshape(-1, 2)
    moduli = np.abs(np.array(list(table.values()), dtype=complex))
    totals = keys.sum(axis=1)
    frequencies = keys[:, 1] - keys[:, 0]
    excluded = (frequencies < k) | (frequencies > l) | (totals > degree)
    weights = np.bincount(totals[excluded], weights=moduli[excluded], minlength=powers.shape[1])
    return float(np.max(residual + powers @ weights))


class Truncation:
    """Chosen window, degree and truncated field."""

    def __init__(self, k, l, degree, field, tail):
        self.k = k
        self.l = l
        self.degree = degree
        self.field = field
        self.tail = tail

    def __iter__(self):
        return iter((self.k, self.l, self.degree, self.field))

    def __repr__(self):
        return f"Truncation([{self.k}, {self.l}], N={self.degree}, tail={self.tail:.3e})"


def choose_truncation(spec, eps, samples, j_max=12):
    """Smallest nested window and degree with sup tail <= eps and an admissible field."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    if isinstance(spec, PolyField):
        report = membership_check(spec, samples)
        if report.admissible:
            k_global, l_global = spec.global_exponents
            return Truncation(k_global, l_global, spec.degree_bound, spec, 0.0)
    reference = _degree_limit(spec)
    table = _table(spec, reference)
    powers = np.abs(samples)[:, None] ** np.arange(reference + 1)[None, :]
    residual = _residual_tail(spec, reference)
    failures = []
    for k, l in nested_windows(j_max):
        for degree in range(max(-k, l), reference + 1):
            tail = _sup_tail(table, powers, residual, k, l, degree)
            if tail <= eps:
                break
        else:
            failures.append(f"[{k}, {l}]: tail above {eps:g}")
            continue
        try:
            field = project_Pkl(spec, k, l, degree)
        except (EmptyWindow, VanishingField) as exc:
            failures.append(f"[{k}, {l}]: {exc}")
            continue
        report = membership_check(field, samples)
        if report.admissible:
            logger.info("Truncation of %s for eps=%g: window [%d, %d], N=%d, tail %.3e.",
                        spec.name, eps, k, l, degree, tail)
            return Truncation(k, l, degree, field, tail)
        failed = sorted({violation['condition'] for violation in report.violations})
        failures.append(f"[{k}, {l}] N={degree}: fails {', '.join(failed)}")
    raise NoAdmissibleWindow(
        f"No admissible window for {spec.name} at eps={eps:g} up to j_max={j_max}: " + '; '.join(failures[-3:])
    )


def reference_truncation(spec, fidelity):
    """Every frequency up to the first degree whose certified tail is below fidelity.

    The reference only feeds forward projections, so the H-ness conditions
    are not imposed on it.

    >>> reference_truncation(GeometricFieldSpec(0.3, 'holomorphic'), 1e-2)
    Truncation([-4, 0], N=4, tail=3.471e-03)
    """
    if fidelity <= 0:
        raise ValueError(f"fidelity must be positive, got {fidelity}")
    if isinstance(spec, PolyField):
        k_global, l_global = spec.global_exponents
        return Truncation(k_global, l_global, spec.degree_bound, spec, 0.0)
    for degree in range(MAX_REFERENCE_DEGREE + 1):
        tail = spec.tail(degree)
        if tail <= fidelity:
            break
    else:
        raise NoAdmissibleWindow(f"Tail of {spec.name} stays above {fidelity:g} up to degree {MAX_REFERENCE_DEGREE}")
    field = PolyField(spec.coefficients(degree), zero_tol=getattr(spec, 'zero_tol', None),
                      tail_bound=tail, name=f"{spec.name}N{degree}")
    k_global, l_global = field.global_exponents
    logger.info("Reference for %s at fidelity %g: window [%d, %d], N=%d, tail %.3e.",
                spec.name, fidelity, k_global, l_global, degree, tail)
    return Truncation(k_global, l_global, degree, field, tail)


def lq_distance(first, second, q, theta_spacing, s_spacing):
    """Discrete L^q distance over the (theta, s) grid with uniform weights; q = inf is the sup."""
    difference = np.abs(first - second)
    if q == np.inf:
        return float(difference.max())
    return float((np.sum(difference ** q) * theta_spacing * s_spacing) ** (1.0 / q))


def _parse_q(value):
    if value in ('inf', 'infinity', np.inf):
        return np.inf
    return float(value)


def _q_key(q):
    return 'inf' if q == np.inf else f"{q:g}"


class StabilityExperiment:
    """Shared reference data for a stability study."""

    def __init__(self, spec, phantom, config):
        self.spec = spec
        self.phantom = phantom
        self.config = config
        self.samples = disc_samples(config.hness_samples, seed=config.seed, radius=config.mask)
        self.grid = ScalarGrid(config.n, config.mask)
        self.truth = self.grid.sample(phantom.evaluate)

    def prepare(self, eps_list):
        """Reference field, common grid and reference sinogram."""
        self.reference = reference_truncation(self.spec, REFERENCE_FIDELITY * min(eps_list))
        chart = build_chart(self.reference.field, self.config.n_curves, self.config.labeling,
                            self.config.threads)
        self.s_grid = make_s_grid(chart, self.config.n_s)
        self.reference_sino = ray_transform(self.phantom, self.reference.field, chart,
                                            self.config.n_theta, self.config.n_s,
                                            self.config.threads, s_grid=self.s_grid)
        self.reference_hilbert = hilbert_s(self.reference_sino.values, decay_tol=None)

    def run(self, eps, q_list):
        """Distances and reconstruction gaps for one eps."""
        started = time.perf_counter()
        truncation = choose_truncation(self.spec, eps, self.samples)
        chart = build_chart(truncation.field, self.config.n_curves, self.config.labeling)
        sino = ray_transform(self.phantom, truncation.field, chart, self.config.n_theta,
                             self.config.n_s, s_grid=self.s_grid)
        theta_spacing, s_spacing = sino.theta_spacing, sino.s_spacing
        distances = {
            _q_key(q): lq_distance(sino.values, self.reference_sino.values, q, theta_spacing, s_spacing)
            for q in list(q_list) + [np.inf]
        }
        hilbert_gap = hilbert_s(sino.values, decay_tol=None) - self.reference_hilbert
        from_reference = backproject(filter_sinogram(self.reference_sino, decay_tol=None),
                                     chart, truncation.field, self.grid)
        from_truncated = backproject(filter_sinogram(sino, decay_tol=None), chart, truncation.field, self.grid)
        return {
            'epsilon': eps,
            'window': [truncation.k, truncation.l, truncation.degree],
            'tail_bound': truncation.tail,
            'sino_distance': distances,
            'schwartz_delta': {
                'sup': float(np.max(np.abs(hilbert_gap))),
                'd1': float(np.max(np.abs(s_derivative(hilbert_gap, s_spacing)))),
            },
            'recon_sup_gap': _masked_sup(from_reference.values - self.truth.values, self.grid),
            'recon_data_gap': _masked_sup(from_reference.values - from_truncated.values, self.grid),
            'runtime_s': time.perf_counter() - started,
        }


def _masked_sup(values, grid):
    return float(np.nanmax(np.abs(values[grid.mask])))


def _fit(entries):
    eps = np.array([entry['epsilon'] for entry in entries])
    distance = np.array([entry['sino_distance']['inf'] for entry in entries])
    positive = distance > 0
    constant = float(np.max(distance / eps)) if len(eps) else 0.0
    if positive.sum() < 2 or len(set(eps[positive])) < 2:
        return None, constant
    slope, _ = np.polyfit(np.log(eps[positive]), np.log(distance[positive]), 1)
    return float(slope), constant


def _monotone(values, slack=0.05):
    return all(later <= earlier * (1.0 + slack) + 1e-15 for earlier, later in zip(values, values[1:]))


def stability_report(spec, phantom, eps_list, q_list, config):
    """Sinogram distances and reconstruction gaps of truncations at each eps."""
    eps_list = sorted((float(eps) for eps in eps_list), reverse=True)
    q_list = [_parse_q(q) for q in q_list if _parse_q(q) != np.inf]
    experiment = StabilityExperiment(spec, phantom, config)
    experiment.prepare(eps_list)
    entries = parallel_map(lambda eps: experiment.run(eps, q_list), eps_list, config.threads)
    slope, constant = _fit(entries)
    report = {
        'spec': spec.name,
        'phantom': phantom.name,
        'reference_window': [experiment.reference.k, experiment.reference.l, experiment.reference.degree],
        'reference_tail': experiment.reference.tail,
        'q': [_q_key(q) for q in q_list] + ['inf'],
        'entries': entries,
        'slope': slope,
        'constant': constant,
        'distances_monotone': _monotone([entry['sino_distance']['inf'] for entry in entries]),
        'recon_gap_monotone': _monotone([entry['recon_sup_gap'] for entry in entries]),
    }
    logger.info("Stability of %s: slope %s, C %.3e.", spec.name, slope, constant)
    return report


def write_stability_csv(report, path):
    """Companion CSV with one row per eps."""
    keys = report['q']
    with open(path, 'wt', encoding="utf-8", newline='') as fp:
        writer = csv.writer(fp)
        writer.writerow(['epsilon', 'k', 'l', 'N'] + [f"dist_{key}" for key in keys]
                        + ['schwartz_sup', 'schwartz_d1', 'recon_sup_gap', 'recon_data_gap'])
        for entry in report['entries']:
            writer.writerow(
                [f"{entry['epsilon']:.17g}"] + entry['window']
                + [f"{entry['sino_distance'][key]:.17g}" for key in keys]
                + [f"{entry['schwartz_delta']['sup']:.17g}", f"{entry['schwartz_delta']['d1']:.17g}",
                   f"{entry['recon_sup_gap']:.17g}", f"{entry['recon_data_gap']:.17g}"]
            )
    return path
