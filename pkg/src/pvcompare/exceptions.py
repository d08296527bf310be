"""Exception hierarchy.

Input problems derive from :class:`InputError` (a ``ValueError``); failures of
the numerical machinery derive from :class:`NumericalError`. The command line
maps the former to exit code 2 and the latter to exit code 3.
"""


class PVCompareError(Exception):
    """Base class for every error raised by this package."""


class InputError(PVCompareError, ValueError):
    """Invalid user-supplied data (negative or fractional counts, bad flags)."""


class ZeroCellForMi(InputError):
    """Multiple imputation needs every verified count a_ij, b_ij > 0."""


class InfeasibleScenario(InputError):
    """A simulation scenario whose cell probabilities are not a distribution."""


class NumericalError(PVCompareError, ArithmeticError):
    """Base class for numerical failures."""


class SingularMatrix(NumericalError):
    pass


class EvaluationFailure(NumericalError):
    """A function probed by a finite-difference scheme returned a non-finite value."""


class InvalidDf(NumericalError, ValueError):
    pass


class DegenerateTest(NumericalError):
    """Predictive values that do not map to a sensitivity/specificity in (0, 1)."""


class InfeasibleAlpha(NumericalError):
    """Dependence parameters outside their admissible range (negative cell mass)."""


class DegenerateCell(NumericalError):
    """A closed-form estimator has a zero denominator."""


class ZeroMass(NumericalError):
    pass


class LogOfNonpositive(NumericalError):
    pass


class NotConverged(NumericalError):
    pass


class BoundaryEstimate(NumericalError):
    """An EM estimate sits on the boundary of the parameter space."""


class DmNotConverged(NumericalError):
    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"DM row {row} did not stabilise")


class SingularContrastCovariance(NumericalError):
    pass


class ZeroVarianceContrast(NumericalError):
    pass


class EmptyMargin(NumericalError):
    def __init__(self, margin, message=None):
        self.margin = margin
        super().__init__(message or f"empty margin: {margin}")


class Separation(NumericalError):
    """Logistic fit diverges (perfect or quasi-complete separation)."""


class NonConvergence(NumericalError):
    pass


class SingularPooledCovariance(NumericalError):
    pass


class NegativeRsWarning(UserWarning):
    """Estimated missing-information ratio was negative and floored at zero."""
