"""Exception hierarchy shared by every module."""


class LandauLabError(Exception):
    """Base class for all package errors."""


class DomainError(LandauLabError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class EvaluationError(LandauLabError, FloatingPointError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class AccuracyError(LandauLabError):
    """Successive quadrature refinements disagree by more than the tolerance."""

    def __init__(self, message, coarse=None, fine=None):
        super().__init__(message)
        self.coarse = coarse
        self.fine = fine


class ConstructionError(LandauLabError):
    """A geometric or parametric object could not be built as requested."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateInputError(LandauLabError, ValueError):
    """Input is valid but makes the requested ratio or estimate meaningless."""


class UsageError(LandauLabError, ValueError):
    """Invalid experiment configuration or command-line usage."""
