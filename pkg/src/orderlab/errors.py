"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain where a function is defined or supported."""


class PoleError(DomainError):
    """Evaluation requested (numerically) at a pole."""


class RegimeError(DomainError):
    """An asymptotic formula was asked for outside its validity window."""


class BoundaryZoneError(DomainError):
    """Angle lies in a shadow-boundary transition zone where the far-field form fails."""


class NumericalError(ArithmeticError):
    """A solver produced non-finite values or lost its accuracy guarantee."""


class ReportIncomplete(RuntimeError):
    """A summary was requested before every required sweep was supplied."""


class TruncationWarning(RuntimeWarning):
    """The last retained partial wave still contributes noticeably."""


class AccuracyWarning(RuntimeWarning):
    """Time step is large compared with the accuracy bound of the implicit scheme."""
