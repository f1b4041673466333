"""Exceptions raised by the numerical pipeline.

Every failure that should end a CLI run with exit code 2 derives from
:class:`NumericalFailure`. The ``stage`` attribute is filled in by
:func:`complexray.utils.stage` when the exception crosses a pipeline stage.
"""


class NumericalFailure(RuntimeError):
    """Numerical failure, optionally labelled with the pipeline stage."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        message = super().__str__()
        if self.stage:
            return f"[{self.stage}] {message}"
        return message


class ValidationFailure(RuntimeError):
    """An invariant of the oracle suite did not hold."""


class VanishingField(NumericalFailure, ValueError):
    """The field coefficient vanishes somewhere on the disc."""


class AllCoefficientsVanish(NumericalFailure):
    """Every Laurent coefficient is below the zero tolerance."""


class NonpositiveWeight(NumericalFailure):
    """The rescaling weight is not positive inside the disc."""


class NoInteriorRoot(NumericalFailure):
    """The complexified coefficient has no root in the open disc."""


class QuadratureNearSingular(NumericalFailure):
    """Jensen integrand vanishes at a quadrature node."""


class MethodDisagreement(NumericalFailure):
    """Winding count and companion-matrix count differ."""

    def __init__(self, message, condition=None, stage=None):
        super().__init__(message, stage=stage)
        self.condition = condition


class Trapped(NumericalFailure):
    """A characteristic curve did not leave the disc in time."""


class MultiComponentInflow(NumericalFailure):
    """Inflow arcs cannot be labelled by a single monotone parameter."""


class OutOfChart(NumericalFailure):
    """A point could not be traced back to the inflow boundary."""


class SignUndetermined(NumericalFailure):
    """Orthogonal field orientation could not be fixed."""


class NonDecayingRow(NumericalFailure):
    """Sinogram row does not decay at its ends."""


class KernelBlowup(NumericalFailure):
    """Poisson kernel evaluated on or outside the unit circle."""


class ImaginaryResidual(NumericalFailure):
    """Orthogonal derivative produced a non-negligible imaginary part."""


class EmptyWindow(NumericalFailure):
    """No coefficient survives a frequency window projection."""


class InsufficientNonzeroPairs(NumericalFailure):
    """Too few consecutive nonzero Fourier coefficients for a ratio test."""


class NoAdmissibleWindow(NumericalFailure):
    """No truncation window yields an admissible polynomial field."""


class QuadratureSingular(NumericalFailure):
    """Green's function kernel is singular at a quadrature node."""
