"""
Complexified coefficients and H-ness audits
===========================================

Substituting ``(z, zbar) -> (z / lam, lam zbar)`` in the field coefficient
and carrying the pushforward factor turns the rotation parameter
``e^{i theta}`` into a disc variable ``lam``:

.. code-block:: text

    xi(z, lam)  = sum_r c_r(z) lam^(r + 1)
    rho(z, lam) = sum_r conj(c_r(z)) lam^(-r - 1)

When ``k_mu < -1`` the field is divided by the weight ``w`` first, which
gives the rational coefficients ``a = xi / w_lam`` and ``b = rho / w_lam``
with the shared denominator ``2 lam^m - z^m - zbar^m lam^(2m)``. That
denominator has a zero inside the disc at every ``z != 0``, so the audit
records it and inversion uses :func:`absorbed_roots` instead.

The audit checks, sample by sample, that the ``dz`` coefficient has a root
``lambda_i(z)`` in the unit disc, that the ``dzbar`` coefficient has no
interior zeros away from the origin, and that the exponents allow the
quotient to stay analytic. Every verdict is cross-checked by two methods:
a Jensen-formula quadrature and an explicit root count.
"""

import logging

import numpy as np
from numpy.polynomial import polynomial as npp

from .errors import (
    MethodDisagreement, NoInteriorRoot, NumericalFailure,
    QuadratureNearSingular, SignUndetermined,
)
from .field import rescale_weight
from .utils import complex_pair, parallel_map


logger = logging.getLogger("complexray")

DISC_RADIUS = 1.0 - 1e-9
MAX_QUAD_NODES = 65536
QUAD_AGREEMENT = 1e-12
SINGULAR_NODE = 1e-10
VERDICT_TOL = 1e-6
ORIENTATION_REFERENCES = (0.0, 0.25, -0.25, 0.25j, -0.25j)


class LaurentPoly:
    """Finite Laurent polynomial in lam at a fixed point z."""

    def __init__(self, terms, z=0j):
        self.terms = {int(power): complex(value) for power, value in terms.items() if value != 0}
        self.z = complex(z)

    def __repr__(self):
        return f"LaurentPoly({self.terms!r}, z={self.z!r})"

    def __eq__(self, other):
        return isinstance(other, LaurentPoly) and self.terms == other.terms

    @property
    def lowest(self):
        """Smallest exponent with nonzero coefficient."""
        return min(self.terms, default=0)

    @property
    def highest(self):
        """Largest exponent with nonzero coefficient."""
        return max(self.terms, default=0)

    def coefficients(self):
        """Ascending coefficients of lam^(-lowest) times self."""
        lowest = self.lowest
        coeffs = np.zeros(self.highest - lowest + 1, dtype=complex)
        for power, value in self.terms.items():
            coeffs[power - lowest] = value
        return coeffs

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        total = np.zeros_like(lam)
        for power, value in self.terms.items():
            total = total + value * lam ** power
        return total


class RationalLaurent:
    """Quotient of two Laurent polynomials sharing a point z."""

    def __init__(self, numerator, denominator):
        self.numerator = numerator
        self.denominator = denominator

    def __repr__(self):
        return f"RationalLaurent({self.numerator!r} / {self.denominator!r})"

    def __call__(self, lam):
        return self.numerator(lam) / self.denominator(lam)


def _shift(field):
    """Power of lam multiplying the reduced numerator polynomial beyond lam^k."""
    power = field.rescaling_power
    if power:
        return power + 1
    return 1


def complexified_coeffs(field, z, rescaled=False):
    """Complexified coefficients at z.

    Unrescaled returns ``(xi, rho)``; rescaled returns the rational pair
    ``(a, b)`` sharing the complexified weight as denominator.

    >>> from .field import quadratic_field
    >>> xi, rho = complexified_coeffs(quadratic_field(0.3), 1.0)
    >>> sorted(xi.terms.items())
    [(-1, (0.3+0j)), (1, (1+0j))]
    """
    z = complex(z)
    table = {r: complex(value) for r, value in field.laurent_table(z).items()}
    if not rescaled:
        xi = LaurentPoly({r + 1: value for r, value in table.items()}, z)
        rho = LaurentPoly({-r - 1: np.conj(value) for r, value in table.items()}, z)
        return xi, rho
    power = field.rescaling_power
    if power == 0:
        xi, rho = complexified_coeffs(field, z)
        unit = LaurentPoly({0: 1.0}, z)
        return RationalLaurent(xi, unit), RationalLaurent(rho, unit)
    top = power + 1
    numerator_a = LaurentPoly({r + top: value for r, value in table.items()}, z)
    numerator_b = LaurentPoly({top - r - 2: np.conj(value) for r, value in table.items()}, z)
    denominator = weight_denominator(field, z)
    return RationalLaurent(numerator_a, denominator), RationalLaurent(numerator_b, denominator)


def weight_denominator(field, z):
    """2 lam^m - z^m - zbar^m lam^(2m), the complexified rescaling weight times lam^m."""
    power = field.rescaling_power
    z = complex(z)
    if power == 0:
        return LaurentPoly({0: 1.0}, z)
    terms = {power: 2.0}
    terms[0] = terms.get(0, 0.0) - z ** power
    terms[2 * power] = terms.get(2 * power, 0.0) - np.conj(z) ** power
    return LaurentPoly(terms, z)


def rotated_coeffs(field, z, theta):
    """xi(z, e^{i theta}) and rho(z, e^{i theta}), broadcasting z against theta.

    On the unit circle the complexified coefficient is the rotated field,
    ``xi = e^{i theta} mu(z e^{-i theta})`` and ``rho = conj(xi)``.
    """
    phase = np.exp(1j * np.asarray(theta, dtype=float))
    xi = phase * field.evaluate(np.asarray(z, dtype=complex) * np.conj(phase))
    return xi, np.conj(xi)


def _reduced_numerator(field, z):
    """Ascending coefficients of sum_{j=k}^{l} c_j lam^(j-k) and the local (k, l)."""
    k_local, l_local = field.local_exponents(z)
    table = field.laurent_table(complex(z))
    coeffs = np.array(
        [complex(table.get(j, 0.0)) for j in range(k_local, l_local + 1)],
        dtype=complex,
    )
    return coeffs, k_local, l_local


def _reduced_conjugate(field, z):
    """Ascending coefficients of sum_j conj(c_j) lam^(l-j)."""
    coeffs, _, _ = _reduced_numerator(field, z)
    return np.conj(coeffs[::-1])


def _argument(value):
    return float(np.angle(value) % (2.0 * np.pi)) if value != 0 else 0.0


def _order_candidates(candidates):
    """Smallest modulus first, ties broken by smallest argument in [0, 2 pi)."""
    candidates = sorted(candidates, key=lambda lam: (abs(lam), _argument(lam)))
    if not candidates:
        return candidates
    smallest = abs(candidates[0])
    tied = [lam for lam in candidates if abs(lam) - smallest <= 1e-9 * max(1.0, smallest)]
    chosen = min(tied, key=_argument)
    candidates.remove(chosen)
    return [chosen] + candidates


def interior_roots(field, z):
    """All zeros of the dz coefficient in the unit disc, in selection order."""
    coeffs, k_local, _ = _reduced_numerator(field, z)
    candidates = []
    if k_local + _shift(field) > 0:
        candidates.append(0j)
    if len(coeffs) > 1:
        candidates.extend(
            complex(root)
            for root in npp.polyroots(coeffs)
            if abs(root) < 1.0
        )
    return _order_candidates(candidates)


def find_lambda_i(field, z):
    """Interior root lambda_i(z) of the dz coefficient.

    >>> from .field import quadratic_field
    >>> find_lambda_i(quadratic_field(0.3), 0)
    0j
    >>> root = find_lambda_i(quadratic_field(0.3), 0.5)
    >>> round(root.imag, 4), abs(root.real) < 1e-12
    (0.2739, True)
    """
    roots = interior_roots(field, z)
    if not roots:
        raise NoInteriorRoot(f"No zero of the complexified coefficient inside the disc at z={complex(z)}")
    return roots[0]


def absorbed_roots(field, z, lambda_i):
    """Interior zeros of xi cancelled by the disc weight at z.

    With ``m = |k_mu| - 1 > 0`` the coefficient ``xi`` has a pole of order
    up to m at ``lam = 0``. The weight

    .. code-block:: text

        W(lam) = prod_j (lam - lam_j) (1 - conj(lam_j) lam) / lam^m

    is real and positive on the unit circle, and ``xi / W`` is analytic in
    the disc when the ``lam_j`` are m interior zeros of ``lam^m xi`` other
    than ``lambda_i``. Zeros at the origin are listed with multiplicity.

    >>> from .field import quadratic_field
    >>> field = quadratic_field(0.3)
    >>> root = find_lambda_i(field, 0.5)
    >>> other, = absorbed_roots(field, 0.5, root)
    >>> abs(other + root) < 1e-12
    True
    >>> absorbed_roots(field, 0, 0j)
    [0j]
    """
    power = field.rescaling_power
    if power == 0:
        return []
    coeffs, k_local, _ = _reduced_numerator(field, z)
    zeros = [0j] * max(0, k_local + power + 1)
    if len(coeffs) > 1:
        zeros.extend(complex(root) for root in npp.polyroots(coeffs) if abs(root) < 1.0)
    if zeros:
        zeros.remove(min(zeros, key=lambda lam: abs(lam - lambda_i)))
    zeros = _order_candidates(zeros)
    if len(zeros) < power:
        raise NoInteriorRoot(
            f"Need {power} interior zeros besides lambda_i at z={complex(z)} to cancel the pole, "
            f"found {len(zeros)}"
        )
    return zeros[:power]


def disc_weight(roots, theta):
    """W(e^{i theta}) = prod_j |1 - lam_j e^{-i theta}|^2 along the last axis of roots.

    Zero entries pad rows with fewer roots.

    >>> float(disc_weight([0.5], 0.0))
    0.25
    >>> disc_weight(np.zeros((3, 0)), 1.0).tolist()
    [1.0, 1.0, 1.0]
    """
    roots = np.asarray(roots, dtype=complex)
    factors = np.abs(1.0 - roots * np.exp(-1j * float(theta))) ** 2
    return np.prod(factors, axis=-1)


class JensenMargins:
    """Jensen-formula margins; iterates as ``(cond1, cond2)``."""

    def __init__(self, cond1, cond2, error=0.0, nodes=0, vacuous=False):
        self.cond1 = cond1
        self.cond2 = cond2
        self.error = error
        self.nodes = nodes
        self.vacuous = vacuous

    def __iter__(self):
        return iter((self.cond1, self.cond2))

    def __repr__(self):
        if self.vacuous:
            return "JensenMargins(vacuous)"
        return f"JensenMargins(cond1={self.cond1:.6g}, cond2={self.cond2:.6g}, error={self.error:.1e})"

    @property
    def threshold(self):
        """Margins smaller than this are not trusted for verdicts."""
        return max(VERDICT_TOL, 10.0 * self.error)

    @property
    def cond1_pass(self):
        """Reduced dz numerator has a zero inside the disc."""
        return self.vacuous or self.cond1 > 0.0

    @property
    def cond2_pass(self):
        """Reduced dzbar numerator has no zeros inside the disc."""
        return self.vacuous or self.cond2 >= -VERDICT_TOL


def _mean_log_modulus(coeffs, nodes):
    """Trapezoid mean of log|poly(e^{i phi})| with singular-node shifting."""
    step = 2.0 * np.pi / nodes
    for offset in (0.0, 0.5 * step):
        phi = offset + step * np.arange(nodes)
        values = np.abs(npp.polyval(np.exp(1j * phi), coeffs))
        if values.min() >= SINGULAR_NODE:
            return float(np.mean(np.log(values)))
        logger.debug("Jensen node within %g of a zero, shifting grid by half a step", SINGULAR_NODE)
    raise QuadratureNearSingular(
        f"Polynomial vanishes within {SINGULAR_NODE:g} of the unit circle at {nodes} nodes"
    )


def _adaptive_mean_log(coeffs, quad_n):
    nodes = quad_n
    current = _mean_log_modulus(coeffs, nodes)
    error = np.inf
    while nodes < MAX_QUAD_NODES:
        refined = _mean_log_modulus(coeffs, 2 * nodes)
        error = abs(refined - current)
        nodes, current = 2 * nodes, refined
        if error <= QUAD_AGREEMENT:
            break
    return current, error, nodes


def jensen_criteria(field, z, quad_n=512):
    """Jensen-formula margins for the first two H-ness conditions.

    ``cond1`` is positive exactly when the reduced dz numerator has a zero
    in the disc; ``cond2`` is zero when the reduced dzbar numerator has
    none and negative otherwise.
    """
    if quad_n < 2:
        raise ValueError(f"quad_n must be at least 2, got {quad_n}")
    coeffs, k_local, l_local = _reduced_numerator(field, z)
    if k_local == l_local:
        return JensenMargins(0.0, 0.0, vacuous=True)
    mean_p, error_p, nodes_p = _adaptive_mean_log(coeffs, quad_n)
    conj_coeffs = np.conj(coeffs[::-1])
    mean_q, error_q, nodes_q = _adaptive_mean_log(conj_coeffs, quad_n)
    return JensenMargins(
        cond1=mean_p - float(np.log(abs(coeffs[0]))),
        cond2=float(np.log(abs(conj_coeffs[0]))) - mean_q,
        error=max(error_p, error_q),
        nodes=max(nodes_p, nodes_q),
    )


class RootCount:
    """Zeros of a polynomial inside the disc, counted two ways."""

    def __init__(self, count, roots, condition):
        self.count = count
        self.roots = roots
        self.condition = condition

    def __iter__(self):
        return iter((self.count, self.roots))

    def __repr__(self):
        return f"RootCount({self.count}, {self.roots!r})"


def _winding_number(coeffs, radius):
    nodes = 256
    while True:
        phi = 2.0 * np.pi * np.arange(nodes + 1) / nodes
        values = npp.polyval(radius * np.exp(1j * phi), coeffs)
        if np.min(np.abs(values)) == 0.0:
            raise MethodDisagreement("Polynomial vanishes on the winding contour")
        steps = np.angle(values[1:] / values[:-1])
        if np.max(np.abs(steps)) < np.pi / 4 or nodes >= 2 ** 20:
            return int(round(float(np.sum(steps)) / (2.0 * np.pi)))
        nodes *= 2


def roots_in_disc(poly):
    """Count zeros inside the unit disc by argument principle and companion matrix.

    ``poly`` holds ascending coefficients.

    >>> count, roots = roots_in_disc([-0.5, 2.0, -0.5])
    >>> count, round(roots[0].real, 6)
    (1, 0.267949)
    >>> roots_in_disc([0.0, 1.0]).count
    1
    """
    coeffs = np.trim_zeros(np.asarray(poly, dtype=complex), 'b')
    if coeffs.size == 0:
        raise ValueError("Zero polynomial has no well-defined roots")
    if coeffs.size == 1:
        return RootCount(0, [], 1.0)
    roots = npp.polyroots(coeffs)
    inside = [complex(root) for root in roots if abs(root) < DISC_RADIUS]
    inside.sort(key=lambda lam: (abs(lam), _argument(lam)))
    condition = 1.0
    if coeffs.size > 2:
        condition = float(np.linalg.cond(npp.polycompanion(coeffs)))
    winding = _winding_number(coeffs, DISC_RADIUS)
    if winding != len(inside):
        raise MethodDisagreement(
            f"Winding number {winding} disagrees with {len(inside)} companion eigenvalues in the disc "
            f"(condition {condition:.3e})",
            condition=condition,
        )
    return RootCount(len(inside), inside, condition)


class HnessReport:
    """Per-sample verdicts of the H-ness conditions."""

    def __init__(self, field, records):
        self.field = field
        self.records = records

    @property
    def verdict(self):
        """Aggregate verdict over conditions 1 to 3."""
        return "pass" if all(record['passed'] for record in self.records) else "fail"

    @property
    def denominator_clean(self):
        """No interior zero of the complexified weight at any sample."""
        return not any(record['denominator_audit']['zeros'] for record in self.records)

    @property
    def certification(self):
        """certified, empirical (audit found weight zeros) or failed."""
        if self.verdict != "pass":
            return "failed"
        return "certified" if self.denominator_clean else "empirical"

    def failures(self, condition):
        """Records failing the named condition."""
        return [record for record in self.records if record[condition]['verdict'] == "fail"]

    def to_json(self):
        """Serializable report."""
        return {
            'field': self.field.name,
            'verdict': self.verdict,
            'certification': self.certification,
            'cond4': "assumed",
            'samples': self.records,
        }


def _audit_cond1(field, z, margins, zero_multiplicity):
    coeffs, _, _ = _reduced_numerator(field, z)
    count = 0
    if len(coeffs) > 1:
        count = roots_in_disc(coeffs).count
    agree = None
    if not margins.vacuous and abs(margins.cond1) > margins.threshold:
        agree = (margins.cond1 > 0.0) == (count >= 1)
    roots = interior_roots(field, z)
    record = {
        'verdict': "pass" if (zero_multiplicity > 0 or count >= 1) and roots else "fail",
        'margin': None if margins.vacuous else margins.cond1,
        'root_count': count + max(zero_multiplicity, 0),
        'lambda_i': complex_pair(roots[0]) if roots else None,
        'agree': agree,
    }
    if agree is False:
        record['verdict'] = "fail"
    return record


def _audit_cond2(field, z, margins):
    if margins.vacuous:
        return {'verdict': "vacuous", 'margin': None, 'zeros': [], 'agree': None}
    count, zeros = roots_in_disc(_reduced_conjugate(field, z))
    zeros = [lam for lam in zeros if abs(lam) > 1e-12]
    agree = None
    if abs(margins.cond2) > margins.threshold:
        agree = (margins.cond2 >= -VERDICT_TOL) == (count == 0)
    passed = not zeros and agree is not False
    return {
        'verdict': "pass" if passed else "fail",
        'margin': margins.cond2,
        'zeros': [complex_pair(lam) for lam in zeros],
        'agree': agree,
    }


def _audit_cond3(field, z):
    k_local, l_local = field.local_exponents(z)
    if complex(z) == 0 or k_local == l_local:
        return {'verdict': "vacuous", 'margin': None}
    c_k = abs(complex(field.laurent(k_local, z)))
    c_l = abs(complex(field.laurent(l_local, z)))
    ratio = c_k / c_l
    passed = l_local + k_local + 2 >= 0 and ratio < 1.0
    return {'verdict': "pass" if passed else "fail", 'margin': 1.0 - ratio, 'ratio': ratio}


def _audit_denominator(field, z):
    if field.rescaling_power == 0:
        return {'zeros': [], 'applicable': False}
    _, zeros = roots_in_disc(weight_denominator(field, z).coefficients())
    if zeros:
        logger.warning("Complexified weight vanishes inside the disc at z=%s: %s", complex(z), zeros)
    return {
        'zeros': [complex_pair(lam) for lam in zeros],
        'applicable': True,
        'weight': float(rescale_weight(field, z)),
    }


def audit_sample(field, z, quad_n=512):
    """H-ness record for one sample point."""
    z = complex(z)
    record = {'z': complex_pair(z), 'cond4': {'verdict': "assumed"}}
    try:
        k_local, _ = field.local_exponents(z)
        margins = jensen_criteria(field, z, quad_n)
        record['cond1'] = _audit_cond1(field, z, margins, k_local + _shift(field))
        record['cond2'] = _audit_cond2(field, z, margins)
        record['cond3'] = _audit_cond3(field, z)
        record['denominator_audit'] = _audit_denominator(field, z)
        record['quadrature'] = {'nodes': margins.nodes, 'error': margins.error}
    except NumericalFailure as exc:
        logger.warning("H-ness audit at z=%s failed: %s", z, exc)
        for condition in ('cond1', 'cond2', 'cond3'):
            record.setdefault(condition, {'verdict': "fail", 'margin': None})
        record.setdefault('denominator_audit', {'zeros': [], 'applicable': False})
        record['error'] = f"{type(exc).__name__}: {exc}"
    record['passed'] = all(
        record[condition]['verdict'] in ("pass", "vacuous")
        for condition in ('cond1', 'cond2', 'cond3')
    )
    logger.debug("H-ness at z=%s: %s", z, "pass" if record['passed'] else "fail")
    return record


def hness_check(field, samples, quad_n=512, threads=1):
    """Audit conditions 1 to 3 of H-ness and the complexified weight at every sample."""
    samples = [complex(z) for z in np.atleast_1d(np.asarray(samples, dtype=complex))]
    records = parallel_map(lambda z: audit_sample(field, z, quad_n), samples, threads)
    report = HnessReport(field, records)
    logger.info("H-ness of %s over %d samples: %s (%s)",
                field.name, len(records), report.verdict, report.certification)
    return report


def raw_orthogonal_derivative(field, chart, z):
    """X_perp s = 2 Im(mu ds) before sign fixing."""
    ds, _ = chart.grad_s(z)
    return 2.0 * float(np.imag(complex(field.evaluate(complex(z))) * ds))


def orientation(field, chart):
    """Global sign making X_perp s positive, cached on the chart."""
    if chart.orientation is not None:
        return chart.orientation
    for reference in ORIENTATION_REFERENCES:
        value = raw_orthogonal_derivative(field, chart, reference)
        if abs(value) >= 1e-10:
            chart.orientation = 1.0 if value > 0 else -1.0
            logger.debug("Orthogonal field orientation %+d fixed at z=%s", chart.orientation, reference)
            return chart.orientation
    raise SignUndetermined("X_perp s vanishes at every reference point")


def orthogonal_coeffs(field, z, theta, chart):
    """Coefficients of X_perp_theta along d and dbar, oriented so that X_perp s > 0."""
    xi, rho = rotated_coeffs(field, z, theta)
    sign = orientation(field, chart)
    return sign * (-1j * xi), sign * (1j * rho)
