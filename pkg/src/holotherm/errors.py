"""Exception hierarchy shared by all holotherm modules."""


class HolothermError(Exception):
    """Base class for every error raised by the library."""


class InvalidDimensionError(HolothermError, ValueError):
    pass


class ShapeError(HolothermError, ValueError):
    pass


class DomainError(HolothermError, ValueError):
    pass


class MapRangeError(HolothermError, ValueError):
    """An IFS branch sends a fiber point outside the fiber."""


class SupportError(HolothermError, ValueError):
    pass


class ContractionError(HolothermError):
    """Raised when a sampled pair violates the uniform contraction inequality.

    ``witness`` is ``(x1, z1, x2, z2)`` and ``ratio`` the observed quotient.
    """

    def __init__(self, message, witness=None, ratio=None, report=None):
        super().__init__(message)
        self.witness = witness
        self.ratio = ratio
        self.report = report


class ConvergenceError(HolothermError):
    def __init__(self, message, last_residual=None, iterations=None):
        super().__init__(message)
        self.last_residual = last_residual
        self.iterations = iterations


class NotNormalizedError(HolothermError, ValueError):
    pass


class HolonomyError(HolothermError):
    pass


class MissingCertificateError(HolothermError):
    pass


class PressureNonzeroError(HolothermError, ValueError):
    pass


class InfeasibleError(HolothermError, ValueError):
    pass


class OracleScaleError(HolothermError, ValueError):
    pass


class ValidationError(HolothermError, ValueError):
    """Scenario validation failure; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("scenario validation failed:\n  " + "\n  ".join(self.errors))
