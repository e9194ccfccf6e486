"""Exception hierarchy shared by all solver layers."""


class NumericalError(RuntimeError):
    """Base class for failures of a numerical procedure (CLI exit status 3)."""


class StepSizeError(NumericalError):
    """Adaptive step size underflowed: the problem looks stiff or singular."""


class DomainError(NumericalError, ValueError):
    """A right-hand side or integrand produced a non-finite value."""


class BracketError(NumericalError, ValueError):
    """No sign change on the supplied bracket."""


class RangeError(NumericalError, OverflowError):
    """Result is not representable in double precision."""


class PostconditionError(NumericalError):
    """A computed object violates one of its documented invariants."""


class DegreeOverflowError(NumericalError):
    """Mode integration failed at a harmonic degree."""

    def __init__(self, message, largest_stable_l=None):
        super().__init__(message)
        self.largest_stable_l = largest_stable_l


class ContradictionError(NumericalError):
    """A quantity that is provably positive came out nonpositive."""


class TruncationError(NumericalError):
    """Degree truncation could not be certified before reaching the cap."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SaturationError(NumericalError, OverflowError):
    """Exact exponential evolution overflowed for some degrees."""

    def __init__(self, message, degrees=()):
        super().__init__(message)
        self.degrees = tuple(degrees)


class ValidationError(ValueError):
    """Configuration or model assumptions are violated (CLI exit status 2)."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class TranslationModeError(ValueError):
    """Degree-1 harmonics are rigid translations; there is no field to build."""

    alpha = 0.0
