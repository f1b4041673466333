"""
Polynomial field coefficients
=============================

A planar vector field ``X = mu d + conj(mu) dbar`` is described by its
complex coefficient

.. code-block:: text

    mu(z, zbar) = sum a_pq z^p zbar^q

stored as a finite table of ``a_pq``. Grouping the terms by the frequency
``r = q - p`` gives the Laurent coefficients ``c_r(z)`` that everything
downstream is built from: the complexified coefficients, the exponents
``k(z) <= l(z)`` and the rescaling weight ``w(z)``.

Field file format:

.. code-block:: json

    {"coeffs": [{"p": 0, "q": 0, "re": 1.0, "im": 0.0},
                {"p": 2, "q": 0, "re": 0.3, "im": 0.0}],
     "zero_tol": 1e-12}
"""

import logging
from collections import namedtuple

import numpy as np
from scipy.optimize import root

from .errors import AllCoefficientsVanish, NonpositiveWeight, VanishingField
from .utils import read_json, write_json


logger = logging.getLogger("complexray")

GLOBAL = "global"

Exponents = namedtuple('Exponents', ['k', 'l'])


class PolyField:
    """Finite coefficient table a_pq of the field coefficient mu."""

    def __init__(self, coeffs, zero_tol=None, tail_bound=0.0, name=None, check_disc=True):
        table = {}
        for (p, q), value in dict(coeffs).items():
            p, q = int(p), int(q)
            if p < 0 or q < 0:
                raise ValueError(f"Negative exponent in coefficient ({p}, {q})")
            table[(p, q)] = complex(value)
        scale = max((abs(value) for value in table.values()), default=0.0)
        if scale == 0.0:
            raise VanishingField("Field has no nonzero coefficients")
        machine_zero = np.finfo(float).eps * scale
        self.coeffs = {
            key: value
            for key, value in sorted(table.items())
            if abs(value) > machine_zero
        }
        self.zero_tol = float(zero_tol) if zero_tol else 1e-12 * scale
        self.name = name or 'field'
        self.metadata = {'tail_bound': float(tail_bound)}
        self.degree_bound = max(p + q for p, q in self.coeffs)
        self._frequencies = sorted({q - p for p, q in self.coeffs})
        if check_disc:
            self._check_nonvanishing()

    def __repr__(self):
        terms = ' + '.join(f"({value:g})z^{p}zb^{q}" for (p, q), value in self.coeffs.items())
        return f"<PolyField {self.name}: {terms}>"

    def __eq__(self, other):
        return isinstance(other, PolyField) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def _check_nonvanishing(self):
        radii = np.linspace(0.0, 1.0, 65)
        angles = np.linspace(0.0, 2.0 * np.pi, 128, endpoint=False)
        grid = radii[:, None] * np.exp(1j * angles[None, :])
        moduli = np.abs(self.evaluate(grid))
        smallest = float(np.min(moduli))
        for start in grid.ravel()[np.argsort(moduli, axis=None)[:8]]:
            zero = self._polish_zero(start)
            if zero is not None:
                smallest = min(smallest, abs(complex(self.evaluate(zero))))
        if smallest <= self.zero_tol:
            raise VanishingField(
                f"|mu| drops to {smallest:.3e} on the closed disc, field {self.name} is not admissible"
            )
        self.metadata['min_abs_mu'] = smallest

    def _polish_zero(self, start):
        """Zero of mu near start inside the closed disc, or None."""
        def residual(point):
            value = complex(self.evaluate(complex(point[0], point[1])))
            return [value.real, value.imag]

        solution = root(residual, [start.real, start.imag], method='hybr')
        zero = complex(solution.x[0], solution.x[1])
        if not solution.success or abs(zero) > 1.0:
            return None
        return zero

    def _powers(self, z):
        z = np.asarray(z, dtype=complex)
        zbar = np.conj(z)
        powers, conj_powers = [np.ones_like(z)], [np.ones_like(z)]
        for _ in range(self.degree_bound):
            powers.append(powers[-1] * z)
            conj_powers.append(conj_powers[-1] * zbar)
        return powers, conj_powers

    def evaluate(self, z):
        """Return mu(z) for scalar or array z.

        >>> field = PolyField({(0, 0): 1.0, (2, 0): 0.3})
        >>> complex(field.evaluate(1j))
        (0.7+0j)
        """
        powers, conj_powers = self._powers(z)
        total = np.zeros_like(powers[0])
        for (p, q), value in self.coeffs.items():
            total = total + value * powers[p] * conj_powers[q]
        return total

    def mu_scalar(self, z):
        """Fast scalar evaluation for ODE right-hand sides."""
        zbar = z.conjugate()
        return sum(value * z ** p * zbar ** q for (p, q), value in self.coeffs.items())

    def laurent_table(self, z):
        """Return {r: c_r(z)} for every frequency present in the table."""
        powers, conj_powers = self._powers(z)
        table = {r: np.zeros_like(powers[0]) for r in self._frequencies}
        for (p, q), value in self.coeffs.items():
            table[q - p] = table[q - p] + value * powers[p] * conj_powers[q]
        return table

    def laurent(self, r, z):
        """Return c_r(z), exactly zero when no term has frequency r."""
        if r not in self._frequencies:
            return np.zeros_like(np.asarray(z, dtype=complex))
        return self.laurent_table(z)[r]

    @property
    def frequencies(self):
        """Sorted frequencies q - p with nonzero coefficients."""
        return list(self._frequencies)

    @property
    def global_exponents(self):
        """(k_mu, l_mu) read off the coefficient table."""
        return Exponents(self._frequencies[0], self._frequencies[-1])

    @property
    def rescaling_power(self):
        """m = |k_mu| - 1 when rescaling is needed, otherwise 0."""
        k_global = self.global_exponents.k
        if k_global < -1:
            return abs(k_global) - 1
        return 0

    def local_exponents(self, z):
        """(k(z), l(z)): extreme frequencies with |c_r(z)| above zero_tol."""
        table = self.laurent_table(complex(z))
        alive = [r for r, value in table.items() if abs(complex(value)) > self.zero_tol]
        if not alive:
            raise AllCoefficientsVanish(
                f"All Laurent coefficients vanish at z={complex(z)}; zero_tol={self.zero_tol:g} is too large"
            )
        return Exponents(min(alive), max(alive))

    def to_json(self):
        """Serializable representation."""
        return {
            'name': self.name,
            'zero_tol': self.zero_tol,
            'tail_bound': self.metadata['tail_bound'],
            'coeffs': [
                {'p': p, 'q': q, 're': value.real, 'im': value.imag}
                for (p, q), value in self.coeffs.items()
            ],
        }

    @classmethod
    def from_json(cls, document, check_disc=True):
        """Build field from the JSON document described in the module docstring."""
        coeffs = {}
        for entry in document['coeffs']:
            key = (int(entry['p']), int(entry['q']))
            if key in coeffs:
                raise ValueError(f"Duplicate coefficient {key}")
            coeffs[key] = complex(entry.get('re', 0.0), entry.get('im', 0.0))
        return cls(
            coeffs,
            zero_tol=document.get('zero_tol'),
            tail_bound=document.get('tail_bound', 0.0),
            name=document.get('name'),
            check_disc=check_disc,
        )


class ExponentProfile:
    """Global and local irreducible exponents of a field."""

    def __init__(self, field):
        self.field = field
        self.k_global, self.l_global = field.global_exponents

    def local_k(self, z):
        """k(z)"""
        return self.field.local_exponents(z).k

    def local_l(self, z):
        """l(z)"""
        return self.field.local_exponents(z).l


def load_field(path, check_disc=True):
    """Read field file; audits pass check_disc=False to inspect vanishing fields."""
    return PolyField.from_json(read_json(path), check_disc=check_disc)


def save_field(field, path):
    """Write field file."""
    write_json(path, field.to_json())


def constant_field(value=1.0):
    """Field with mu identically equal to value (straight lines)."""
    return PolyField({(0, 0): value}, name='constant')


def quadratic_field(alpha=0.3):
    """The model field mu = 1 + alpha z^2."""
    return PolyField({(0, 0): 1.0, (2, 0): alpha}, name=f'quadratic-{alpha:g}')


def eval_mu(field, z):
    """Return mu(z).

    >>> complex(eval_mu(quadratic_field(0.3), 1.0))
    (1.3+0j)
    """
    return field.evaluate(z)


def laurent_coeff(field, r, z):
    """Return c_r(z) = sum over q - p = r of a_pq z^p zbar^q.

    >>> complex(laurent_coeff(quadratic_field(0.3), -2, 1.0))
    (0.3+0j)
    >>> complex(laurent_coeff(quadratic_field(0.3), 5, 1.0))
    0j
    """
    return field.laurent(r, z)


def exponents(field, z):
    """Local exponents (k, l) at z, or the ExponentProfile for ``"global"``.

    >>> exponents(quadratic_field(0.3), 0.5)
    Exponents(k=-2, l=0)
    >>> exponents(quadratic_field(0.3), 0)
    Exponents(k=0, l=0)
    """
    if isinstance(z, str):
        if z != GLOBAL:
            raise ValueError(f"Unknown exponent scope {z!r}")
        return ExponentProfile(field)
    mu = complex(field.evaluate(complex(z)))
    if abs(mu) <= field.zero_tol:
        raise VanishingField(f"|mu({complex(z)})| is below zero_tol")
    return field.local_exponents(z)


def rescale_weight(field, z):
    """w(z) = 2 - z^m - zbar^m with m = |k_mu| - 1; identically 1 when k_mu >= -1.

    >>> float(rescale_weight(quadratic_field(0.3), 0.5))
    1.0
    >>> float(rescale_weight(quadratic_field(0.3), -0.5))
    3.0
    """
    power = field.rescaling_power
    z = np.asarray(z, dtype=complex)
    if power == 0:
        return np.ones(z.shape)
    weight = 2.0 - 2.0 * np.real(z ** power)
    inside = np.abs(z) < 1.0
    if np.any(inside & (weight <= 0.0)):
        raise NonpositiveWeight(f"Rescaling weight is not positive inside the disc (m={power})")
    return weight


class MembershipReport:
    """Verdicts of the polynomial-space membership conditions."""

    CONDITIONS = ('global_exponents', 'exponent_balance', 'coefficient_order', 'nonvanishing')

    def __init__(self, field):
        self.field = field
        self.verdicts = {name: True for name in self.CONDITIONS}
        self.violations = []
        self.notes = []
        self.samples_checked = 0

    def fail(self, condition, z, margin, detail):
        """Record a violation."""
        self.verdicts[condition] = False
        self.violations.append({
            'condition': condition,
            'z': None if z is None else complex(z),
            'margin': float(margin),
            'detail': detail,
        })

    @property
    def passed(self):
        """All conditions hold."""
        return all(self.verdicts.values())

    @property
    def no_rescaling_needed(self):
        """k_mu >= -1: the complexified coefficient already has no negative powers."""
        return self.field.global_exponents.k >= -1

    @property
    def admissible(self):
        """Usable for reconstruction, with or without rescaling."""
        if self.passed:
            return True
        return self.no_rescaling_needed and self.verdicts['nonvanishing']

    def to_json(self):
        """Serializable summary."""
        return {
            'field': self.field.name,
            'passed': self.passed,
            'admissible': self.admissible,
            'no_rescaling_needed': self.no_rescaling_needed,
            'samples_checked': self.samples_checked,
            'verdicts': dict(self.verdicts),
            'violations': self.violations,
            'notes': list(self.notes),
        }


def membership_check(field, samples):
    """Check the conditions defining the admissible polynomial space on samples."""
    report = MembershipReport(field)
    k_global, l_global = field.global_exponents
    if k_global >= -1:
        report.fail('global_exponents', None, -1 - k_global,
                    f"k_mu={k_global} is not below -1")
        report.notes.append("no rescaling path needed")
    if l_global < 0:
        report.fail('global_exponents', None, l_global, f"l_mu={l_global} is negative")
    samples = np.atleast_1d(np.asarray(samples, dtype=complex))
    for z in samples:
        report.samples_checked += 1
        mu = abs(complex(field.evaluate(z)))
        if mu <= field.zero_tol:
            report.fail('nonvanishing', z, mu - field.zero_tol, "|mu| vanishes")
            continue
        k_local, l_local = field.local_exponents(z)
        if -k_local > l_local + 2:
            report.fail('exponent_balance', z, l_local + 2 + k_local,
                        f"-k(z)={-k_local} exceeds l(z)+2={l_local + 2}")
        if abs(z) > 0.0 and k_local < l_local:
            c_k = abs(complex(field.laurent(k_local, z)))
            c_l = abs(complex(field.laurent(l_local, z)))
            if not 0.0 < c_k < c_l:
                report.fail('coefficient_order', z, c_l - c_k,
                            f"|c_k|={c_k:.6g} is not below |c_l|={c_l:.6g}")
    logger.debug("Membership of %s: %r", field.name, report.verdicts)
    return report
